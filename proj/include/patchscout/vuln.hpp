#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace patchscout {

// One vulnerability's identity, description and structured database fields.
struct VulnRecord {
    std::string cve_id;
    std::string description;
    std::optional<double> cvss;
    std::vector<std::string> cpes;
    std::vector<std::string> references;
    std::vector<std::string> patch_urls;
    std::optional<std::string> package_name;
    std::optional<std::string> update_to_version;

    bool operator==(const VulnRecord&) const = default;
};

enum class HintSource { structured_field, cpe, llm_extraction };

struct VersionHint {
    std::string repo;           // "owner/name" or URL, as written
    std::string fixed_version;  // verbatim; normalization happens downstream
    HintSource source;

    bool operator==(const VersionHint&) const = default;
};

std::string to_string(HintSource source);

// True for "CVE-YYYY-NNNN+" (case-insensitive).
bool valid_cve_id(const std::string& id);
std::string canonical_cve_id(const std::string& id);

VulnRecord vuln_record_from_json(const nlohmann::json& j);
nlohmann::json vuln_record_to_json(const VulnRecord& record);

struct DatasetLineError {
    std::size_t line_number;  // 1-based
    std::string message;
};

struct DatasetLoadResult {
    std::vector<VulnRecord> records;
    std::vector<DatasetLineError> errors;
};

// NDJSON, one record per line; invalid lines are collected, not fatal
// unless every non-empty line fails.
DatasetLoadResult load_dataset(const std::filesystem::path& path);

// CPE 2.3 formatted-string binding. Other bindings raise ParseError.
struct CpeParts {
    std::string vendor;
    std::string product;
    std::string version;
};
CpeParts parse_cpe23(const std::string& uri);

// Deterministic rule cascade: structured fields, then CPE, else empty.
std::vector<VersionHint> extract_version_hints(const VulnRecord& record);

}  // namespace patchscout
