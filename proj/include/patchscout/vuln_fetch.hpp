#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "patchscout/gateway.hpp"
#include "patchscout/prompt.hpp"
#include "patchscout/vuln.hpp"

namespace patchscout {

enum class VulnSource { nvd, osv, local_cache };

std::string to_string(VulnSource source);

struct FetchConfig {
    std::filesystem::path cache_dir;
    std::string nvd_base_url;  // config key nvd_base_url
    std::string osv_base_url;  // config key osv_base_url
    int max_retries = 3;
};

// Network responses are cached verbatim under
// <cache_dir>/vuln/<source>/<CVE-ID>.json with a .meta sidecar.
VulnRecord fetch_record(const std::string& cve_id, VulnSource source,
                        const FetchConfig& config);

VulnRecord parse_nvd_response(const std::string& body, const std::string& cve_id);
VulnRecord parse_osv_response(const std::string& body, const std::string& cve_id);

// Renders the version-extraction prompt, parses "(repository, version)"
// pairs out of the <answer> block. Pairs without a digit in the version
// are dropped.
std::vector<VersionHint> llm_extract_version_hints(const VulnRecord& record,
                                                   Gateway& gateway,
                                                   const TemplateSet& templates);

std::vector<VersionHint> parse_answer_pairs(const std::string& response);

}  // namespace patchscout
