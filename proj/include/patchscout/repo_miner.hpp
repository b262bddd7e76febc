#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "patchscout/git.hpp"
#include "patchscout/vuln.hpp"

namespace patchscout {

struct VersionTag {
    std::string name;
    std::string normalized;
    std::string commit_hash;  // full 40-hex, peeled
    std::int64_t tag_date = 0;

    bool operator==(const VersionTag&) const = default;
};

struct DiffHunk {
    std::string file;
    int old_start = 0;
    int old_len = 0;
    int new_start = 0;
    int new_len = 0;
    std::vector<std::pair<int, std::string>> added_lines;    // new-file line numbers
    std::vector<std::pair<int, std::string>> removed_lines;  // old-file line numbers
};

struct CommitRecord {
    std::string hash;
    std::string abbrev;  // first 7 hex chars
    std::string message;
    std::int64_t author_date = 0;
    std::int64_t commit_date = 0;
    std::vector<std::string> files;
    std::vector<DiffHunk> hunks;
};

struct CandidateSet {
    std::string cve_id;
    std::string repo;
    std::vector<std::pair<std::string, std::string>> version_pairs;  // (prior, fixed) tag names
    std::vector<CommitRecord> commits;
    std::map<std::string, int> filter_trace;  // normalized message -> frequency
    std::vector<std::string> notes;           // cap application etc.
};

// Whitespace collapse, cherry-pick suffix and review trailers stripped,
// case-folded. Idempotent.
std::string normalize_message(const std::string& message);

std::vector<VersionTag> list_tags(const GitRepo& repo);

VersionTag match_fixed_tag(const VersionHint& hint, const std::vector<VersionTag>& tags);

struct CommitRange {
    std::optional<VersionTag> prior;
    std::vector<CommitRecord> commits;  // commit_date ascending
};

CommitRange commit_range(const GitRepo& repo, const VersionTag& fixed,
                         const std::vector<VersionTag>& tags);

// Multi-branch cross-filter: keep commits whose normalized message attains
// the maximum distinct-range frequency. Single range passes through.
CandidateSet cross_filter(
    const std::vector<std::pair<VersionHint, std::vector<CommitRecord>>>& ranges);

struct BuildOptions {
    std::size_t max_candidates = 2000;
};

CandidateSet build_candidates(const VulnRecord& record,
                              const std::vector<VersionHint>& hints,
                              const GitRepo& repo,
                              const BuildOptions& options = {});

// Loads full metadata + diff hunks for one commit.
CommitRecord load_commit(const GitRepo& repo, const std::string& hash);

std::vector<DiffHunk> parse_unified_diff(const std::string& diff_text);

nlohmann::json candidate_set_to_json(const CandidateSet& set);
CandidateSet candidate_set_from_json(const nlohmann::json& j);
nlohmann::json commit_to_json(const CommitRecord& commit);
CommitRecord commit_from_json(const nlohmann::json& j);

}  // namespace patchscout
