#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "patchscout/eval.hpp"
#include "patchscout/expand.hpp"
#include "patchscout/gateway.hpp"
#include "patchscout/vote.hpp"
#include "patchscout/vuln_fetch.hpp"

namespace patchscout {

enum class ProviderMode { live, mock, replay };

struct RunConfig {
    std::filesystem::path cache_dir = ".patchscout-cache";
    std::filesystem::path out_dir = "out";
    int batch_size = 10;
    int rounds = 10;
    std::size_t max_candidates = 2000;
    int token_budget = 8000;
    std::string model_id = "gpt-4o-mini";
    double temperature = 0.7;
    unsigned seed = 0;
    bool shuffle = false;
    ProviderMode provider = ProviderMode::mock;
    bool literal_algorithm = false;
    bool no_cache = false;
    bool refresh = false;
    int jobs = 0;  // 0 = hardware concurrency
    std::filesystem::path mock_script;
    std::filesystem::path dataset;        // local NDJSON of vulnerability records
    std::filesystem::path templates_dir;  // empty = built-in templates
    std::string record_source = "local_cache";  // nvd | osv | local_cache
    std::string nvd_base_url;
    std::string osv_base_url;
    std::string base_url;  // LLM provider
    std::string api_key;   // environment only
};

// Flat key-value config file; CLI flags override file values.
void apply_config_file(RunConfig& config, const std::filesystem::path& path);

std::unique_ptr<Gateway> make_gateway(const RunConfig& config);

struct LocateOutcome {
    PatchResult result;
    VoteTally tally;
    CandidateSet candidates;
};

// Full pipeline for one CVE. Writes patch_result.json, vote_tally.json,
// candidate_set.json, manifest.json and summary.txt into out_dir.
LocateOutcome locate(const std::string& cve_id, const std::string& repo_spec,
                     const RunConfig& config);

VulnRecord resolve_record(const std::string& cve_id, const RunConfig& config);

}  // namespace patchscout
