#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace patchscout {

struct DialogueTranscript {
    std::string prompt_hash;
    std::string request_text;
    std::string response_text;
    std::string model_id;
    std::int64_t latency_ms = 0;
    int round_index = 0;
};

// Stable hash over (request_text, model_id, round_index). Round index in
// the key keeps distinct voting rounds as distinct cache entries.
std::string prompt_hash(const std::string& request_text, const std::string& model_id,
                        int round_index);

class Gateway {
public:
    virtual ~Gateway() = default;
    virtual DialogueTranscript ask(const std::string& request_text, int round_index) = 0;
    virtual std::string model_id() const = 0;
};

// Scripted mock. NDJSON entries {match, response, repeat?}; each request
// takes the first entry whose match is "*" or a substring of the request;
// non-repeat entries are consumed. Exhaustion raises ScriptError.
class MockGateway : public Gateway {
public:
    struct Entry {
        std::string match;
        std::string response;
        bool repeat = false;
        bool used = false;
    };

    explicit MockGateway(std::vector<Entry> entries);
    static MockGateway from_script(const std::filesystem::path& path);
    static std::vector<Entry> load_script(const std::filesystem::path& path);

    DialogueTranscript ask(const std::string& request_text, int round_index) override;
    std::string model_id() const override { return "mock"; }

private:
    std::vector<Entry> entries_;
    std::mutex mutex_;
};

struct HttpGatewayConfig {
    std::string base_url;  // e.g. http://localhost:8080/v1
    std::string api_key;   // only ever sourced from the environment
    std::string model = "gpt-4o-mini";
    double temperature = 0.7;
    int max_retries = 3;
    bool use_cache = true;
    std::filesystem::path cache_dir;
};

// JSON chat-completion client with a disk cache under <cache_dir>/llm/.
class HttpGateway : public Gateway {
public:
    explicit HttpGateway(HttpGatewayConfig config);
    DialogueTranscript ask(const std::string& request_text, int round_index) override;
    std::string model_id() const override { return config_.model; }

private:
    HttpGatewayConfig config_;
};

std::optional<DialogueTranscript> cache_lookup(const std::filesystem::path& cache_dir,
                                               const std::string& hash);
void cache_store(const std::filesystem::path& cache_dir, const DialogueTranscript& t);

enum class AbstainReason { none_found, ambiguous_prefix, invalid_candidate };

struct Abstain {
    AbstainReason reason;
};

using CommitChoice = std::variant<std::string, Abstain>;

// Scans <answer> tags first, then the whole response, for a hex token that
// prefix-matches exactly one member of `valid`. Abstain is a value.
CommitChoice extract_commit_choice(const std::string& response,
                                   const std::set<std::string>& valid);

}  // namespace patchscout
