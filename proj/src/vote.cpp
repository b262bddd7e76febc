#include "patchscout/vote.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "patchscout/errors.hpp"

namespace patchscout {

namespace {

// Queries one batch; returns the chosen commit hash or nullopt (abstain).
std::optional<std::string> query_batch(const std::vector<CommitRecord>& batch,
                                       const VoteOptions& options, Gateway& gateway,
                                       const PromptInputs& inputs, int round_index,
                                       int* query_count) {
    static const std::map<std::string, std::vector<FunctionContext>> no_contexts;
    const PromptBundle bundle =
        build_prompt(*inputs.record, batch,
                     inputs.contexts ? *inputs.contexts : no_contexts,
                     *inputs.templates, {options.token_budget});
    const DialogueTranscript t = gateway.ask(bundle.render(), round_index);
    if (query_count) ++*query_count;

    std::set<std::string> valid;
    for (const auto& commit : batch) valid.insert(commit.hash);
    const CommitChoice choice = extract_commit_choice(t.response_text, valid);
    if (const auto* hash = std::get_if<std::string>(&choice)) return *hash;
    return std::nullopt;
}

}  // namespace

std::vector<std::string> run_round(const std::vector<CommitRecord>& candidates,
                                   const VoteOptions& options, Gateway& gateway,
                                   const PromptInputs& inputs, int round_index,
                                   int* query_count) {
    if (candidates.empty()) throw EmptyCandidateError("run_round: no candidates");
    if (options.batch_size < 2) throw ContractError("batch_size must be >= 2");

    std::vector<CommitRecord> commits = candidates;
    if (options.shuffle_seed) {
        std::mt19937 rng(*options.shuffle_seed + static_cast<unsigned>(round_index));
        std::shuffle(commits.begin(), commits.end(), rng);
    }
    if (commits.size() == 1) return {commits.front().hash};

    const auto batch_size = static_cast<std::size_t>(options.batch_size);
    while (commits.size() > batch_size) {
        std::vector<CommitRecord> survivors;
        for (std::size_t i = 0; i < commits.size(); i += batch_size) {
            std::vector<CommitRecord> batch(
                commits.begin() + static_cast<std::ptrdiff_t>(i),
                commits.begin() +
                    static_cast<std::ptrdiff_t>(std::min(i + batch_size, commits.size())));
            const auto choice =
                query_batch(batch, options, gateway, inputs, round_index, query_count);
            if (!choice) continue;
            for (auto& commit : batch)
                if (commit.hash == *choice) {
                    survivors.push_back(std::move(commit));
                    break;
                }
        }
        if (survivors.empty()) return {};  // every batch abstained
        commits = std::move(survivors);
    }

    if (options.literal_algorithm) {
        // Algorithm as printed: the trailing <= batch_size commits are all
        // extended into the selected list.
        std::vector<std::string> hashes;
        for (const auto& commit : commits) hashes.push_back(commit.hash);
        return hashes;
    }
    if (commits.size() == 1) return {commits.front().hash};
    const auto choice =
        query_batch(commits, options, gateway, inputs, round_index, query_count);
    if (!choice) return {};
    return {*choice};
}

VoteTally run_votes(const CandidateSet& candidate_set, const VoteOptions& options,
                    Gateway& gateway, const PromptInputs& inputs, int* query_count) {
    if (candidate_set.commits.empty())
        throw EmptyCandidateError("run_votes: empty candidate set for " +
                                  candidate_set.cve_id);
    if (options.rounds < 1) throw ContractError("rounds must be >= 1");

    std::vector<std::optional<std::string>> survivors;
    for (int round = 0; round < options.rounds; ++round) {
        // Fresh copy of the candidates each round.
        const auto round_survivors = run_round(candidate_set.commits, options, gateway,
                                               inputs, round, query_count);
        if (round_survivors.empty()) {
            survivors.push_back(std::nullopt);
        } else {
            for (const auto& hash : round_survivors) survivors.emplace_back(hash);
        }
    }
    VoteTally result = tally(survivors);
    result.cve_id = candidate_set.cve_id;
    result.rounds_completed = options.rounds;
    return result;
}

VoteTally tally(const std::vector<std::optional<std::string>>& survivors) {
    VoteTally result;
    result.rounds_completed = static_cast<int>(survivors.size());
    for (const auto& survivor : survivors) {
        if (survivor)
            ++result.votes[*survivor];
        else
            ++result.abstentions;
    }
    int max_count = 0;
    for (const auto& [hash, count] : result.votes) max_count = std::max(max_count, count);
    for (const auto& [hash, count] : result.votes)
        if (count == max_count) result.winners.push_back(hash);
    return result;
}

nlohmann::json vote_tally_to_json(const VoteTally& tally) {
    nlohmann::json j;
    j["cve_id"] = tally.cve_id;
    j["rounds_completed"] = tally.rounds_completed;
    j["votes"] = tally.votes;
    j["abstentions"] = tally.abstentions;
    j["winners"] = tally.winners;
    return j;
}

}  // namespace patchscout
