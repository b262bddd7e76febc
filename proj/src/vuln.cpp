#include "patchscout/vuln.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>
#include <set>

#include "patchscout/errors.hpp"
#include "patchscout/version.hpp"

namespace patchscout {

std::string to_string(HintSource source) {
    switch (source) {
        case HintSource::structured_field: return "structured_field";
        case HintSource::cpe: return "cpe";
        case HintSource::llm_extraction: return "llm_extraction";
    }
    return "unknown";
}

bool valid_cve_id(const std::string& id) {
    static const std::regex pattern("CVE-[0-9]{4}-[0-9]{4,}", std::regex::icase);
    return std::regex_match(id, pattern);
}

std::string canonical_cve_id(const std::string& id) {
    std::string out = id;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return out;
}

VulnRecord vuln_record_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ParseError("vulnerability record must be a JSON object");
    VulnRecord r;
    if (!j.contains("cve_id") || !j["cve_id"].is_string())
        throw ParseError("missing or non-string cve_id");
    r.cve_id = j["cve_id"].get<std::string>();
    if (!valid_cve_id(r.cve_id))
        throw ParseError("invalid cve_id: " + r.cve_id);
    r.cve_id = canonical_cve_id(r.cve_id);

    r.description = j.value("description", std::string{});
    if (r.description.empty()) throw ParseError("empty description for " + r.cve_id);

    if (j.contains("cvss") && !j["cvss"].is_null()) {
        const double score = j["cvss"].get<double>();
        if (score < 0.0 || score > 10.0)
            throw ParseError("cvss out of range for " + r.cve_id);
        r.cvss = score;
    }
    auto read_strings = [&](const char* key, std::vector<std::string>& out) {
        if (j.contains(key) && j[key].is_array())
            for (const auto& v : j[key])
                if (v.is_string()) out.push_back(v.get<std::string>());
    };
    read_strings("cpes", r.cpes);
    read_strings("references", r.references);
    read_strings("patch_urls", r.patch_urls);
    if (j.contains("package_name") && j["package_name"].is_string())
        r.package_name = j["package_name"].get<std::string>();
    if (j.contains("update_to_version") && j["update_to_version"].is_string())
        r.update_to_version = j["update_to_version"].get<std::string>();
    return r;
}

nlohmann::json vuln_record_to_json(const VulnRecord& r) {
    nlohmann::json j;
    j["cve_id"] = r.cve_id;
    j["description"] = r.description;
    if (r.cvss) j["cvss"] = *r.cvss;
    j["cpes"] = r.cpes;
    j["references"] = r.references;
    j["patch_urls"] = r.patch_urls;
    if (r.package_name) j["package_name"] = *r.package_name;
    if (r.update_to_version) j["update_to_version"] = *r.update_to_version;
    return j;
}

DatasetLoadResult load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset: " + path.string());

    DatasetLoadResult result;
    std::string line;
    std::size_t line_number = 0;
    std::size_t non_empty = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ++non_empty;
        try {
            result.records.push_back(vuln_record_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception& e) {
            result.errors.push_back({line_number, e.what()});
        }
    }
    if (non_empty > 0 && result.records.empty())
        throw ParseError("no valid records in " + path.string());
    return result;
}

CpeParts parse_cpe23(const std::string& uri) {
    if (uri.rfind("cpe:2.3:", 0) != 0)
        throw ParseError("unsupported CPE binding (expected cpe:2.3): " + uri);
    std::vector<std::string> fields;
    std::string cur;
    for (std::size_t i = 0; i < uri.size(); ++i) {
        if (uri[i] == '\\' && i + 1 < uri.size()) {  // quoted char
            cur += uri[i + 1];
            ++i;
        } else if (uri[i] == ':') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += uri[i];
        }
    }
    fields.push_back(cur);
    // cpe:2.3:part:vendor:product:version:update:...
    if (fields.size() < 6) throw ParseError("truncated CPE 2.3 string: " + uri);
    CpeParts parts;
    parts.vendor = fields[3];
    parts.product = fields[4];
    parts.version = fields[5];
    return parts;
}

std::vector<VersionHint> extract_version_hints(const VulnRecord& record) {
    std::vector<VersionHint> hints;
    auto push_unique = [&](VersionHint h) {
        if (h.repo.empty() || !version_has_digit(h.fixed_version)) return;
        for (const auto& existing : hints)
            if (existing.repo == h.repo && existing.fixed_version == h.fixed_version) return;
        hints.push_back(std::move(h));
    };

    if (record.package_name && record.update_to_version) {
        push_unique({*record.package_name, *record.update_to_version,
                     HintSource::structured_field});
        return hints;
    }
    for (const auto& uri : record.cpes) {
        CpeParts parts;
        try {
            parts = parse_cpe23(uri);
        } catch (const ParseError&) {
            continue;
        }
        std::string repo = parts.vendor.empty() || parts.vendor == "*"
                               ? parts.product
                               : parts.vendor + "/" + parts.product;
        if (parts.version.empty() || parts.version == "*" || parts.version == "-") continue;
        push_unique({repo, parts.version, HintSource::cpe});
    }
    return hints;
}

}  // namespace patchscout
