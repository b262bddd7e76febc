#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "patchscout/repo_miner.hpp"
#include "patchscout/vuln.hpp"

namespace patchscout {

enum class Relation { same_diff, message_containment, cve_or_issue_ref };

std::string to_string(Relation relation);

struct PatchResult {
    std::string cve_id;
    std::vector<std::string> core;  // vote winners
    std::vector<std::pair<std::string, Relation>> expanded;
    std::vector<std::string> final_set;  // core + expanded, deduplicated
};

// Retrieval enhancement database: commits of the two version ranges
// adjacent to the fixed tag, one on each side, clipped at history edges.
std::vector<CommitRecord> build_search_db(const GitRepo& repo, const VersionTag& fixed,
                                          const std::vector<VersionTag>& tags);

// Relatedness conditions, checked in precedence order:
//   same_diff            equal normalized patch text for a shared file
//   message_containment  title or body substring/equality either way
//   cve_or_issue_ref     message names the CVE id or a harvested issue id
PatchResult expand(const std::vector<std::string>& core,
                   const std::vector<CommitRecord>& core_commits,
                   const std::vector<CommitRecord>& db,
                   const VulnRecord& record);

// Whitespace-normalized concatenated hunk text per file.
std::string normalized_patch_text(const CommitRecord& commit, const std::string& file);

std::vector<std::string> harvest_issue_ids(const VulnRecord& record);

nlohmann::json patch_result_to_json(const PatchResult& result);

}  // namespace patchscout
