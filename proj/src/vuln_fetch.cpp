#include "patchscout/vuln_fetch.hpp"

#include <chrono>
#include <fstream>
#include <regex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "patchscout/errors.hpp"
#include "patchscout/version.hpp"

namespace patchscout {

std::string to_string(VulnSource source) {
    switch (source) {
        case VulnSource::nvd: return "nvd";
        case VulnSource::osv: return "osv";
        case VulnSource::local_cache: return "local_cache";
    }
    return "unknown";
}

namespace {

std::filesystem::path cache_path(const FetchConfig& config, VulnSource source,
                                 const std::string& cve_id) {
    return config.cache_dir / "vuln" / to_string(source) / (cve_id + ".json");
}

std::optional<std::string> read_cache(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_cache(const std::filesystem::path& path, const std::string& body) {
    std::filesystem::create_directories(path.parent_path());
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        out << body;
    }
    std::filesystem::rename(tmp, path);
    std::ofstream meta(path.string() + ".meta");
    meta << "fetched_at=" << std::chrono::duration_cast<std::chrono::seconds>(
                                 std::chrono::system_clock::now().time_since_epoch())
                                 .count()
         << '\n';
}

std::string http_get(const std::string& base_url, const std::string& path,
                     int max_retries) {
    std::string host = base_url;
    std::string prefix;
    const auto scheme = host.find("://");
    const auto slash = host.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (slash != std::string::npos) {
        prefix = host.substr(slash);
        host = host.substr(0, slash);
    }
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

    std::string error;
    for (int attempt = 0; attempt < max_retries; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(std::chrono::seconds(1 << (attempt - 1)));
        httplib::Client client(host);
        client.set_read_timeout(60, 0);
        auto res = client.Get(prefix + path);
        if (!res) {
            error = "transport failure";
            continue;
        }
        if (res->status == 404) throw NotFoundError("record not found: " + path);
        if (res->status != 200) {
            error = "HTTP " + std::to_string(res->status);
            continue;
        }
        return res->body;
    }
    throw FetchError("fetch failed after " + std::to_string(max_retries) +
                     " attempts: " + error);
}

}  // namespace

VulnRecord parse_nvd_response(const std::string& body, const std::string& cve_id) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const std::exception& e) {
        throw ParseError(std::string("malformed NVD response: ") + e.what());
    }
    if (!j.contains("vulnerabilities") || j["vulnerabilities"].empty())
        throw NotFoundError("NVD has no record for " + cve_id);
    const auto& cve = j["vulnerabilities"][0]["cve"];

    VulnRecord r;
    r.cve_id = canonical_cve_id(cve.value("id", cve_id));
    for (const auto& d : cve.value("descriptions", nlohmann::json::array()))
        if (d.value("lang", "") == "en") {
            r.description = d.value("value", "");
            break;
        }
    if (r.description.empty()) throw ParseError("NVD record without description");

    if (cve.contains("metrics"))
        for (const auto& [key, metric_list] : cve["metrics"].items())
            for (const auto& m : metric_list)
                if (m.contains("cvssData") && m["cvssData"].contains("baseScore")) {
                    r.cvss = m["cvssData"]["baseScore"].get<double>();
                    break;
                }

    for (const auto& conf : cve.value("configurations", nlohmann::json::array()))
        for (const auto& node : conf.value("nodes", nlohmann::json::array()))
            for (const auto& match : node.value("cpeMatch", nlohmann::json::array())) {
                std::string criteria = match.value("criteria", "");
                if (criteria.empty()) continue;
                // Fold an end-excluding bound into the URI's version field
                // when the URI itself is unversioned.
                const std::string end = match.value("versionEndExcluding", "");
                if (!end.empty()) {
                    const auto pos = criteria.find(":*:");
                    if (pos != std::string::npos)
                        criteria = criteria.substr(0, pos + 1) + end +
                                   criteria.substr(pos + 2);
                }
                r.cpes.push_back(criteria);
            }

    for (const auto& ref : cve.value("references", nlohmann::json::array()))
        if (ref.contains("url")) r.references.push_back(ref["url"].get<std::string>());
    return r;
}

VulnRecord parse_osv_response(const std::string& body, const std::string& cve_id) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const std::exception& e) {
        throw ParseError(std::string("malformed OSV response: ") + e.what());
    }
    VulnRecord r;
    r.cve_id = canonical_cve_id(cve_id);
    r.description = j.value("details", j.value("summary", std::string{}));
    if (r.description.empty()) throw ParseError("OSV record without details");

    for (const auto& ref : j.value("references", nlohmann::json::array()))
        if (ref.contains("url")) {
            const std::string url = ref["url"].get<std::string>();
            r.references.push_back(url);
            if (ref.value("type", "") == "FIX") r.patch_urls.push_back(url);
        }
    for (const auto& affected : j.value("affected", nlohmann::json::array())) {
        if (!r.package_name && affected.contains("package") &&
            affected["package"].contains("name"))
            r.package_name = affected["package"]["name"].get<std::string>();
        for (const auto& range : affected.value("ranges", nlohmann::json::array()))
            for (const auto& event : range.value("events", nlohmann::json::array()))
                if (event.contains("fixed") && !r.update_to_version)
                    r.update_to_version = event["fixed"].get<std::string>();
    }
    return r;
}

VulnRecord fetch_record(const std::string& cve_id, VulnSource source,
                        const FetchConfig& config) {
    if (!valid_cve_id(cve_id)) throw ParseError("invalid CVE id: " + cve_id);
    const std::string id = canonical_cve_id(cve_id);
    const auto path = cache_path(config, source, id);

    if (source == VulnSource::local_cache) {
        auto body = read_cache(path);
        if (!body) throw NotFoundError("no cached record for " + id);
        return vuln_record_from_json(nlohmann::json::parse(*body));
    }

    std::string body;
    if (auto cached = read_cache(path)) {
        body = *cached;
    } else if (source == VulnSource::nvd) {
        if (config.nvd_base_url.empty()) throw FetchError("nvd_base_url not configured");
        body = http_get(config.nvd_base_url, "/rest/json/cves/2.0?cveId=" + id,
                        config.max_retries);
        write_cache(path, body);
    } else {
        if (config.osv_base_url.empty()) throw FetchError("osv_base_url not configured");
        body = http_get(config.osv_base_url, "/v1/vulns/" + id, config.max_retries);
        write_cache(path, body);
    }
    return source == VulnSource::nvd ? parse_nvd_response(body, id)
                                     : parse_osv_response(body, id);
}

std::vector<VersionHint> parse_answer_pairs(const std::string& response) {
    static const std::regex answer_re("<answer>([\\s\\S]*?)</answer>", std::regex::icase);
    std::smatch m;
    if (!std::regex_search(response, m, answer_re))
        throw ExtractionError("response carries no <answer> tag",
                              ExtractionError::Kind::no_answer_tag);
    const std::string block = m.str(1);

    static const std::regex pair_re("\\(([^(),]+),([^()]+)\\)");
    std::vector<VersionHint> hints;
    for (auto it = std::sregex_iterator(block.begin(), block.end(), pair_re);
         it != std::sregex_iterator(); ++it) {
        auto trim = [](std::string s) {
            while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
                s.erase(s.begin());
            while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
                s.pop_back();
            return s;
        };
        VersionHint hint{trim(it->str(1)), trim(it->str(2)), HintSource::llm_extraction};
        if (hint.repo.empty() || !version_has_digit(hint.fixed_version)) continue;
        bool duplicate = false;
        for (const auto& existing : hints)
            duplicate |= existing.repo == hint.repo &&
                         existing.fixed_version == hint.fixed_version;
        if (!duplicate) hints.push_back(std::move(hint));
    }
    if (block.find_first_not_of(" \t\r\n") == std::string::npos)
        throw ExtractionError("answer tag is empty", ExtractionError::Kind::empty_answer);
    return hints;
}

std::vector<VersionHint> llm_extract_version_hints(const VulnRecord& record,
                                                   Gateway& gateway,
                                                   const TemplateSet& templates) {
    if (record.description.empty())
        throw ContractError("llm_extract_version_hints requires a description");
    const std::string prompt = render_version_extract_prompt(record, templates);
    const DialogueTranscript t = gateway.ask(prompt, 0);
    return parse_answer_pairs(t.response_text);
}

}  // namespace patchscout
