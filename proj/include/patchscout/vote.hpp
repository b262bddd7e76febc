#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "patchscout/gateway.hpp"
#include "patchscout/prompt.hpp"
#include "patchscout/repo_miner.hpp"

namespace patchscout {

struct VoteTally {
    std::string cve_id;
    int rounds_completed = 0;
    std::map<std::string, int> votes;  // commit hash -> count
    int abstentions = 0;
    std::vector<std::string> winners;  // argmax set
};

struct VoteOptions {
    int batch_size = 10;
    int rounds = 10;
    bool literal_algorithm = false;  // extend all trailing commits, no final query
    int token_budget = 8000;
    std::optional<unsigned> shuffle_seed;  // per-round shuffle, off by default
};

struct PromptInputs {
    const VulnRecord* record = nullptr;
    const std::map<std::string, std::vector<FunctionContext>>* contexts = nullptr;
    const TemplateSet* templates = nullptr;
};

// One tournament round: batched reduction until a single survivor (or, in
// literal mode, until the trailing batch is extended whole). Empty result
// means the round abstained.
std::vector<std::string> run_round(const std::vector<CommitRecord>& candidates,
                                   const VoteOptions& options,
                                   Gateway& gateway,
                                   const PromptInputs& inputs,
                                   int round_index,
                                   int* query_count = nullptr);

VoteTally run_votes(const CandidateSet& candidate_set, const VoteOptions& options,
                    Gateway& gateway, const PromptInputs& inputs,
                    int* query_count = nullptr);

// Pure counting; std::nullopt survivors count as abstentions.
VoteTally tally(const std::vector<std::optional<std::string>>& survivors);

nlohmann::json vote_tally_to_json(const VoteTally& tally);

}  // namespace patchscout
