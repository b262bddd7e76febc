#include "patchscout/repo_miner.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "patchscout/errors.hpp"
#include "patchscout/version.hpp"

namespace patchscout {

namespace {

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            lines.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    if (!cur.empty()) lines.push_back(cur);
    return lines;
}

bool starts_with_ci(const std::string& s, const std::string& prefix) {
    if (s.size() < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i)
        if (std::tolower(static_cast<unsigned char>(s[i])) !=
            std::tolower(static_cast<unsigned char>(prefix[i])))
            return false;
    return true;
}

bool is_dropped_line(const std::string& line) {
    std::string t = line;
    while (!t.empty() && std::isspace(static_cast<unsigned char>(t.front()))) t.erase(t.begin());
    if (t.empty()) return false;
    if (t.front() == '(' && starts_with_ci(t, "(cherry picked from commit")) return true;
    static const char* trailers[] = {"signed-off-by:", "reviewed-by:", "acked-by:",
                                     "tested-by:", "cc:", "co-authored-by:"};
    for (const char* trailer : trailers)
        if (starts_with_ci(t, trailer)) return true;
    return false;
}

}  // namespace

std::string normalize_message(const std::string& message) {
    std::string out;
    for (const auto& line : split_lines(message)) {
        if (is_dropped_line(line)) continue;
        for (char c : line) {
            const char lower = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            if (std::isspace(static_cast<unsigned char>(lower))) {
                if (!out.empty() && out.back() != ' ') out += ' ';
            } else {
                out += lower;
            }
        }
        if (!out.empty() && out.back() != ' ') out += ' ';
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

std::vector<VersionTag> list_tags(const GitRepo& repo) {
    if (!repo.is_repo()) throw RepoError("not a git repository: " + repo.dir().string());
    const std::string out = repo.run(
        {"for-each-ref", "refs/tags",
         "--format=%(refname:short)\t%(creatordate:unix)\t%(objectname)\t%(*objectname)"});
    std::vector<VersionTag> tags;
    for (const auto& line : split_lines(out)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, '\t')) fields.push_back(field);
        if (fields.size() < 3) continue;
        VersionTag tag;
        tag.name = fields[0];
        tag.normalized = normalize_version(tag.name);
        tag.tag_date = std::stoll(fields[1]);
        // Annotated tags carry the peeled commit in the 4th field.
        tag.commit_hash = (fields.size() > 3 && !fields[3].empty()) ? fields[3] : fields[2];
        tags.push_back(std::move(tag));
    }
    std::sort(tags.begin(), tags.end(), [](const VersionTag& a, const VersionTag& b) {
        const int cmp = compare_versions(a.normalized, b.normalized);
        if (cmp != 0) return cmp < 0;
        if (a.tag_date != b.tag_date) return a.tag_date < b.tag_date;
        return a.name < b.name;
    });
    return tags;
}

VersionTag match_fixed_tag(const VersionHint& hint, const std::vector<VersionTag>& tags) {
    if (tags.empty()) throw NoTagError("repository has no tags", {});

    for (const auto& tag : tags)
        if (tag.name == hint.fixed_version) return tag;

    const std::string wanted = normalize_version(hint.fixed_version);
    std::vector<const VersionTag*> normalized_matches;
    for (const auto& tag : tags)
        if (tag.normalized == wanted) normalized_matches.push_back(&tag);
    if (normalized_matches.size() == 1) return *normalized_matches.front();
    if (normalized_matches.size() > 1) {
        std::vector<std::string> names;
        for (const auto* t : normalized_matches) names.push_back(t->name);
        throw AmbiguousTagError("version " + hint.fixed_version +
                                    " matches multiple tags",
                                names);
    }

    std::vector<const VersionTag*> substring_matches;
    for (const auto& tag : tags)
        if (!wanted.empty() && tag.normalized.find(wanted) != std::string::npos)
            substring_matches.push_back(&tag);
    if (substring_matches.size() == 1) return *substring_matches.front();
    if (substring_matches.size() > 1) {
        std::vector<std::string> names;
        for (const auto* t : substring_matches) names.push_back(t->name);
        throw AmbiguousTagError("version " + hint.fixed_version +
                                    " is a substring of multiple tags",
                                names);
    }

    // Diagnostics: top 3 nearest tags by normalized edit distance.
    std::vector<std::pair<std::size_t, std::string>> scored;
    for (const auto& tag : tags)
        scored.emplace_back(edit_distance(wanted, tag.normalized), tag.name);
    std::sort(scored.begin(), scored.end());
    std::vector<std::string> nearest;
    for (std::size_t i = 0; i < scored.size() && i < 3; ++i)
        nearest.push_back(scored[i].second);
    throw NoTagError("no tag matches version " + hint.fixed_version, nearest);
}

std::vector<DiffHunk> parse_unified_diff(const std::string& diff_text) {
    std::vector<DiffHunk> hunks;
    std::string current_file;
    int old_line = 0;
    int new_line = 0;
    DiffHunk* hunk = nullptr;

    auto parse_git_path = [](const std::string& token) {
        // "a/path" or "b/path" or "/dev/null"
        if (token == "/dev/null") return std::string{};
        if (token.size() > 2 && (token[0] == 'a' || token[0] == 'b') && token[1] == '/')
            return token.substr(2);
        return token;
    };

    for (const auto& line : split_lines(diff_text)) {
        if (line.rfind("diff --git ", 0) == 0) {
            hunk = nullptr;
            current_file.clear();
            std::stringstream ss(line.substr(11));
            std::string a_path, b_path;
            ss >> a_path >> b_path;
            const std::string b = parse_git_path(b_path);
            current_file = b.empty() ? parse_git_path(a_path) : b;
        } else if (line.rfind("@@ ", 0) == 0) {
            DiffHunk h;
            h.file = current_file;
            // @@ -os[,ol] +ns[,nl] @@
            int os = 0, ol = 1, ns = 0, nl = 1;
            const char* p = line.c_str() + 3;
            auto read_pair = [&](char sign, int& start, int& len) {
                while (*p && *p != sign) ++p;
                if (*p == sign) ++p;
                start = std::atoi(p);
                while (*p && std::isdigit(static_cast<unsigned char>(*p))) ++p;
                if (*p == ',') {
                    ++p;
                    len = std::atoi(p);
                    while (*p && std::isdigit(static_cast<unsigned char>(*p))) ++p;
                } else {
                    len = 1;
                }
            };
            read_pair('-', os, ol);
            read_pair('+', ns, nl);
            h.old_start = os;
            h.old_len = ol;
            h.new_start = ns;
            h.new_len = nl;
            hunks.push_back(std::move(h));
            hunk = &hunks.back();
            old_line = os;
            new_line = ns;
        } else if (hunk != nullptr && !line.empty()) {
            if (line[0] == '+' && line.rfind("+++", 0) != 0) {
                hunk->added_lines.emplace_back(new_line, line.substr(1));
                ++new_line;
            } else if (line[0] == '-' && line.rfind("---", 0) != 0) {
                hunk->removed_lines.emplace_back(old_line, line.substr(1));
                ++old_line;
            } else if (line[0] == ' ') {
                ++old_line;
                ++new_line;
            } else if (line[0] == '\\') {
                // "\ No newline at end of file"
            } else {
                hunk = nullptr;
            }
        }
    }
    return hunks;
}

CommitRecord load_commit(const GitRepo& repo, const std::string& hash) {
    CommitRecord commit;
    const std::string meta =
        repo.run({"show", "--no-patch", "--format=%H%x00%at%x00%ct%x00%B", hash});
    std::vector<std::string> parts;
    std::string cur;
    for (char c : meta) {
        if (c == '\0') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);
    if (parts.size() < 4) throw RepoError("unexpected git show output for " + hash);
    commit.hash = parts[0];
    commit.abbrev = commit.hash.substr(0, 7);
    commit.author_date = std::stoll(parts[1]);
    commit.commit_date = std::stoll(parts[2]);
    commit.message = parts[3];
    while (!commit.message.empty() &&
           (commit.message.back() == '\n' || commit.message.back() == '\r'))
        commit.message.pop_back();

    const std::string diff = repo.run(
        {"show", "--format=", "--unified=0", "--no-color", "--no-renames", hash});
    commit.hunks = parse_unified_diff(diff);
    std::set<std::string> seen;
    for (const auto& line : split_lines(diff)) {
        if (line.rfind("diff --git ", 0) != 0) continue;
        std::stringstream ss(line.substr(11));
        std::string a_path, b_path;
        ss >> a_path >> b_path;
        std::string path = b_path == "/dev/null" ? a_path : b_path;
        if (path.size() > 2 && (path[0] == 'a' || path[0] == 'b') && path[1] == '/')
            path = path.substr(2);
        if (seen.insert(path).second) commit.files.push_back(path);
    }
    return commit;
}

CommitRange commit_range(const GitRepo& repo, const VersionTag& fixed,
                         const std::vector<VersionTag>& tags) {
    CommitRange range;
    std::size_t idx = tags.size();
    for (std::size_t i = 0; i < tags.size(); ++i)
        if (tags[i] == fixed) {
            idx = i;
            break;
        }
    if (idx == tags.size()) throw RepoError("fixed tag not in tag list: " + fixed.name);

    // Same-release-line predecessor wins; else the global predecessor.
    const VersionKey fixed_key = parse_version_key(fixed.normalized);
    for (std::size_t i = idx; i-- > 0;) {
        if (same_release_line(parse_version_key(tags[i].normalized), fixed_key)) {
            range.prior = tags[i];
            break;
        }
    }
    if (!range.prior && idx > 0) range.prior = tags[idx - 1];

    std::string out;
    if (range.prior)
        out = repo.run({"rev-list", range.prior->commit_hash + ".." + fixed.commit_hash});
    else
        out = repo.run({"rev-list", fixed.commit_hash});

    std::vector<CommitRecord> commits;
    for (const auto& line : split_lines(out))
        if (!line.empty()) commits.push_back(load_commit(repo, line));
    std::sort(commits.begin(), commits.end(), [](const CommitRecord& a, const CommitRecord& b) {
        if (a.commit_date != b.commit_date) return a.commit_date < b.commit_date;
        return a.hash < b.hash;
    });
    range.commits = std::move(commits);
    return range;
}

CandidateSet cross_filter(
    const std::vector<std::pair<VersionHint, std::vector<CommitRecord>>>& ranges) {
    if (ranges.empty()) throw EmptyCandidateError("no ranges to filter");
    std::size_t total = 0;
    for (const auto& [hint, commits] : ranges) total += commits.size();
    if (total == 0) throw EmptyCandidateError("all version ranges are empty");

    CandidateSet result;
    // Frequency = number of distinct ranges containing the message.
    std::map<std::string, int> frequency;
    for (const auto& [hint, commits] : ranges) {
        std::set<std::string> messages;
        for (const auto& commit : commits) messages.insert(normalize_message(commit.message));
        for (const auto& msg : messages) ++frequency[msg];
    }
    result.filter_trace = frequency;

    std::vector<CommitRecord> pool;
    std::set<std::string> seen;
    for (const auto& [hint, commits] : ranges)
        for (const auto& commit : commits)
            if (seen.insert(commit.hash).second) pool.push_back(commit);

    if (ranges.size() == 1) {
        result.commits = std::move(pool);
    } else {
        int max_freq = 0;
        for (const auto& [msg, freq] : frequency) max_freq = std::max(max_freq, freq);
        for (auto& commit : pool)
            if (frequency.at(normalize_message(commit.message)) == max_freq)
                result.commits.push_back(std::move(commit));
    }
    std::sort(result.commits.begin(), result.commits.end(),
              [](const CommitRecord& a, const CommitRecord& b) {
                  if (a.commit_date != b.commit_date) return a.commit_date < b.commit_date;
                  return a.hash < b.hash;
              });
    return result;
}

CandidateSet build_candidates(const VulnRecord& record,
                              const std::vector<VersionHint>& hints,
                              const GitRepo& repo,
                              const BuildOptions& options) {
    if (hints.empty()) throw ContractError("build_candidates requires at least one hint");
    const auto tags = list_tags(repo);

    std::vector<std::pair<VersionHint, std::vector<CommitRecord>>> ranges;
    std::vector<std::pair<std::string, std::string>> version_pairs;
    std::vector<std::string> failures;
    for (const auto& hint : hints) {
        try {
            const VersionTag fixed = match_fixed_tag(hint, tags);
            CommitRange range = commit_range(repo, fixed, tags);
            version_pairs.emplace_back(range.prior ? range.prior->name : "", fixed.name);
            ranges.emplace_back(hint, std::move(range.commits));
        } catch (const Error& e) {
            failures.push_back(hint.fixed_version + ": " + e.what());
        }
    }
    if (ranges.empty())
        throw NoTagError("no version hint matched a tag for " + record.cve_id, failures);

    CandidateSet set = cross_filter(ranges);
    set.cve_id = record.cve_id;
    set.repo = hints.front().repo;
    set.version_pairs = std::move(version_pairs);
    if (set.commits.size() > options.max_candidates) {
        // Keep the most recent; commits are date-ascending.
        const std::size_t drop = set.commits.size() - options.max_candidates;
        set.commits.erase(set.commits.begin(),
                          set.commits.begin() + static_cast<std::ptrdiff_t>(drop));
        set.notes.push_back("candidate cap applied: dropped " + std::to_string(drop) +
                            " oldest of " + std::to_string(drop + options.max_candidates));
    }
    return set;
}

nlohmann::json commit_to_json(const CommitRecord& c) {
    nlohmann::json j;
    j["hash"] = c.hash;
    j["abbrev"] = c.abbrev;
    j["message"] = c.message;
    j["author_date"] = c.author_date;
    j["commit_date"] = c.commit_date;
    j["files"] = c.files;
    nlohmann::json hunks = nlohmann::json::array();
    for (const auto& h : c.hunks) {
        nlohmann::json hj;
        hj["file"] = h.file;
        hj["old_start"] = h.old_start;
        hj["old_len"] = h.old_len;
        hj["new_start"] = h.new_start;
        hj["new_len"] = h.new_len;
        hj["added_lines"] = h.added_lines;
        hj["removed_lines"] = h.removed_lines;
        hunks.push_back(std::move(hj));
    }
    j["hunks"] = std::move(hunks);
    return j;
}

CommitRecord commit_from_json(const nlohmann::json& j) {
    CommitRecord c;
    c.hash = j.at("hash").get<std::string>();
    c.abbrev = j.at("abbrev").get<std::string>();
    c.message = j.at("message").get<std::string>();
    c.author_date = j.at("author_date").get<std::int64_t>();
    c.commit_date = j.at("commit_date").get<std::int64_t>();
    c.files = j.at("files").get<std::vector<std::string>>();
    for (const auto& hj : j.at("hunks")) {
        DiffHunk h;
        h.file = hj.at("file").get<std::string>();
        h.old_start = hj.at("old_start").get<int>();
        h.old_len = hj.at("old_len").get<int>();
        h.new_start = hj.at("new_start").get<int>();
        h.new_len = hj.at("new_len").get<int>();
        h.added_lines = hj.at("added_lines").get<std::vector<std::pair<int, std::string>>>();
        h.removed_lines = hj.at("removed_lines").get<std::vector<std::pair<int, std::string>>>();
        c.hunks.push_back(std::move(h));
    }
    return c;
}

nlohmann::json candidate_set_to_json(const CandidateSet& set) {
    nlohmann::json j;
    j["cve_id"] = set.cve_id;
    j["repo"] = set.repo;
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& [prior, fixed] : set.version_pairs)
        pairs.push_back({{"prior", prior}, {"fixed", fixed}});
    j["version_pairs"] = std::move(pairs);
    nlohmann::json commits = nlohmann::json::array();
    for (const auto& c : set.commits) commits.push_back(commit_to_json(c));
    j["commits"] = std::move(commits);
    j["filter_trace"] = set.filter_trace;
    j["notes"] = set.notes;
    return j;
}

CandidateSet candidate_set_from_json(const nlohmann::json& j) {
    CandidateSet set;
    set.cve_id = j.at("cve_id").get<std::string>();
    set.repo = j.at("repo").get<std::string>();
    for (const auto& p : j.at("version_pairs"))
        set.version_pairs.emplace_back(p.at("prior").get<std::string>(),
                                       p.at("fixed").get<std::string>());
    for (const auto& cj : j.at("commits")) set.commits.push_back(commit_from_json(cj));
    set.filter_trace = j.at("filter_trace").get<std::map<std::string, int>>();
    set.notes = j.value("notes", std::vector<std::string>{});
    return set;
}

}  // namespace patchscout
