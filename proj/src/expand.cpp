#include "patchscout/expand.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <set>
#include <sstream>

#include "patchscout/errors.hpp"

namespace patchscout {

std::string to_string(Relation relation) {
    switch (relation) {
        case Relation::same_diff: return "same_diff";
        case Relation::message_containment: return "message_containment";
        case Relation::cve_or_issue_ref: return "cve_or_issue_ref";
    }
    return "unknown";
}

std::vector<CommitRecord> build_search_db(const GitRepo& repo, const VersionTag& fixed,
                                          const std::vector<VersionTag>& tags) {
    std::size_t idx = tags.size();
    for (std::size_t i = 0; i < tags.size(); ++i)
        if (tags[i] == fixed) {
            idx = i;
            break;
        }
    if (idx == tags.size()) throw RepoError("fixed tag not in tag list: " + fixed.name);

    // Lower bound: two tags back; upper: one tag forward. Clip at edges.
    const VersionTag* lower = idx >= 2 ? &tags[idx - 2] : nullptr;
    const VersionTag* upper = idx + 1 < tags.size() ? &tags[idx + 1] : &tags[idx];

    std::string out;
    if (lower)
        out = repo.run({"rev-list", lower->commit_hash + ".." + upper->commit_hash});
    else
        out = repo.run({"rev-list", upper->commit_hash});

    std::vector<CommitRecord> commits;
    std::istringstream lines(out);
    std::string line;
    while (std::getline(lines, line)) {
        while (!line.empty() && (line.back() == '\n' || line.back() == '\r'))
            line.pop_back();
        if (!line.empty()) commits.push_back(load_commit(repo, line));
    }
    std::sort(commits.begin(), commits.end(), [](const CommitRecord& a, const CommitRecord& b) {
        if (a.commit_date != b.commit_date) return a.commit_date < b.commit_date;
        return a.hash < b.hash;
    });
    return commits;
}

std::string normalized_patch_text(const CommitRecord& commit, const std::string& file) {
    std::string out;
    for (const auto& hunk : commit.hunks) {
        if (hunk.file != file) continue;
        auto add = [&](char sign, const std::vector<std::pair<int, std::string>>& lines) {
            for (const auto& [number, text] : lines) {
                out += sign;
                bool pending_space = false;
                bool started = false;
                for (char c : text) {
                    if (std::isspace(static_cast<unsigned char>(c))) {
                        pending_space = started;
                    } else {
                        if (pending_space) out += ' ';
                        pending_space = false;
                        started = true;
                        out += c;
                    }
                }
                out += '\n';
            }
        };
        add('-', hunk.removed_lines);
        add('+', hunk.added_lines);
    }
    return out;
}

std::vector<std::string> harvest_issue_ids(const VulnRecord& record) {
    static const std::regex hash_re("#([0-9]+)");
    static const std::regex gh_re("GH-([0-9]+)", std::regex::icase);
    static const std::regex url_re("/(?:issues|pull|pulls|merge_requests)/([0-9]+)");

    std::set<std::string> ids;
    for (const auto& ref : record.references) {
        for (const auto* re : {&hash_re, &gh_re, &url_re})
            for (auto it = std::sregex_iterator(ref.begin(), ref.end(), *re);
                 it != std::sregex_iterator(); ++it)
                ids.insert(it->str(1));
    }
    return {ids.begin(), ids.end()};
}

namespace {

std::string lower(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::pair<std::string, std::string> split_title_body(const std::string& message) {
    const auto pos = message.find('\n');
    if (pos == std::string::npos) return {message, ""};
    return {message.substr(0, pos), message.substr(pos + 1)};
}

bool contains_either_way(const std::string& a, const std::string& b) {
    if (a.empty() || b.empty()) return false;
    return a.find(b) != std::string::npos || b.find(a) != std::string::npos;
}

}  // namespace

PatchResult expand(const std::vector<std::string>& core,
                   const std::vector<CommitRecord>& core_commits,
                   const std::vector<CommitRecord>& db,
                   const VulnRecord& record) {
    if (core.empty()) throw ContractError("expand requires a non-empty core");

    PatchResult result;
    result.cve_id = record.cve_id;
    result.core = core;

    const std::set<std::string> core_set(core.begin(), core.end());
    const std::string cve_lower = lower(record.cve_id);
    const auto issue_ids = harvest_issue_ids(record);

    for (const auto& candidate : db) {
        if (core_set.count(candidate.hash)) continue;

        std::optional<Relation> relation;
        // (1) consistent modification segments on a shared file
        for (const auto& winner : core_commits) {
            for (const auto& file : winner.files) {
                if (std::find(candidate.files.begin(), candidate.files.end(), file) ==
                    candidate.files.end())
                    continue;
                const std::string a = normalized_patch_text(winner, file);
                if (!a.empty() && a == normalized_patch_text(candidate, file)) {
                    relation = Relation::same_diff;
                    break;
                }
            }
            if (relation) break;
        }
        // (2) title/body containment either way
        if (!relation) {
            const auto [cand_title_raw, cand_body_raw] = split_title_body(candidate.message);
            const std::string cand_title = normalize_message(cand_title_raw);
            const std::string cand_body = normalize_message(cand_body_raw);
            for (const auto& winner : core_commits) {
                const auto [win_title_raw, win_body_raw] = split_title_body(winner.message);
                const std::string win_title = normalize_message(win_title_raw);
                const std::string win_body = normalize_message(win_body_raw);
                if (contains_either_way(cand_title, win_title) ||
                    contains_either_way(cand_body, win_body)) {
                    relation = Relation::message_containment;
                    break;
                }
            }
        }
        // (3) CVE id or issue id in the commit message
        if (!relation) {
            const std::string msg = lower(candidate.message);
            if (msg.find(cve_lower) != std::string::npos) {
                relation = Relation::cve_or_issue_ref;
            } else {
                for (const auto& id : issue_ids) {
                    if (msg.find("#" + id) != std::string::npos ||
                        msg.find("gh-" + id) != std::string::npos) {
                        relation = Relation::cve_or_issue_ref;
                        break;
                    }
                }
            }
        }
        if (relation) result.expanded.emplace_back(candidate.hash, *relation);
    }

    result.final_set = core;
    for (const auto& [hash, relation] : result.expanded)
        if (!core_set.count(hash) &&
            std::find(result.final_set.begin(), result.final_set.end(), hash) ==
                result.final_set.end())
            result.final_set.push_back(hash);
    return result;
}

nlohmann::json patch_result_to_json(const PatchResult& result) {
    nlohmann::json j;
    j["cve_id"] = result.cve_id;
    j["core"] = result.core;
    nlohmann::json expanded = nlohmann::json::array();
    for (const auto& [hash, relation] : result.expanded)
        expanded.push_back({{"hash", hash}, {"relation", to_string(relation)}});
    j["expanded"] = std::move(expanded);
    j["final_set"] = result.final_set;
    return j;
}

}  // namespace patchscout
