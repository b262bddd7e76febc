#include "patchscout/gateway.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <regex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "patchscout/errors.hpp"

namespace patchscout {

std::string prompt_hash(const std::string& request_text, const std::string& model_id,
                        int round_index) {
    // FNV-1a 64.
    std::uint64_t h = 14695981039346656037ULL;
    auto mix = [&](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        h ^= 0x1f;
        h *= 1099511628211ULL;
    };
    mix(request_text);
    mix(model_id);
    mix(std::to_string(round_index));
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << h;
    return out.str();
}

MockGateway::MockGateway(std::vector<Entry> entries) : entries_(std::move(entries)) {}

std::vector<MockGateway::Entry> MockGateway::load_script(
    const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open mock script: " + path.string());
    std::vector<Entry> entries;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const std::exception& e) {
            throw ParseError("mock script line " + std::to_string(line_number) + ": " +
                             e.what());
        }
        Entry entry;
        entry.match = j.value("match", std::string{"*"});
        entry.response = j.at("response").get<std::string>();
        entry.repeat = j.value("repeat", false);
        entries.push_back(std::move(entry));
    }
    return entries;
}

MockGateway MockGateway::from_script(const std::filesystem::path& path) {
    return MockGateway(load_script(path));
}

DialogueTranscript MockGateway::ask(const std::string& request_text, int round_index) {
    std::lock_guard<std::mutex> lock(mutex_);
    for (auto& entry : entries_) {
        if (entry.used && !entry.repeat) continue;
        if (entry.match != "*" && request_text.find(entry.match) == std::string::npos)
            continue;
        entry.used = true;
        DialogueTranscript t;
        t.request_text = request_text;
        t.response_text = entry.response;
        t.model_id = model_id();
        t.round_index = round_index;
        t.prompt_hash = prompt_hash(request_text, t.model_id, round_index);
        return t;
    }
    throw ScriptError("mock script exhausted (no entry matches request)");
}

namespace {

nlohmann::json transcript_to_json(const DialogueTranscript& t) {
    return {{"prompt_hash", t.prompt_hash}, {"request_text", t.request_text},
            {"response_text", t.response_text}, {"model_id", t.model_id},
            {"latency_ms", t.latency_ms},       {"round_index", t.round_index}};
}

DialogueTranscript transcript_from_json(const nlohmann::json& j) {
    DialogueTranscript t;
    t.prompt_hash = j.at("prompt_hash").get<std::string>();
    t.request_text = j.at("request_text").get<std::string>();
    t.response_text = j.at("response_text").get<std::string>();
    t.model_id = j.at("model_id").get<std::string>();
    t.latency_ms = j.at("latency_ms").get<std::int64_t>();
    t.round_index = j.at("round_index").get<int>();
    return t;
}

}  // namespace

std::optional<DialogueTranscript> cache_lookup(const std::filesystem::path& cache_dir,
                                               const std::string& hash) {
    const auto path = cache_dir / "llm" / (hash + ".json");
    std::ifstream in(path);
    if (!in) return std::nullopt;
    try {
        nlohmann::json j;
        in >> j;
        return transcript_from_json(j);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

void cache_store(const std::filesystem::path& cache_dir, const DialogueTranscript& t) {
    const auto dir = cache_dir / "llm";
    std::filesystem::create_directories(dir);
    const auto path = dir / (t.prompt_hash + ".json");
    const auto tmp = dir / (t.prompt_hash + ".json.tmp");
    {
        std::ofstream out(tmp);
        out << transcript_to_json(t).dump(2) << '\n';
    }
    std::filesystem::rename(tmp, path);  // atomic on the same filesystem
}

HttpGateway::HttpGateway(HttpGatewayConfig config) : config_(std::move(config)) {
    if (config_.base_url.empty()) throw GatewayError("gateway base URL not configured");
}

DialogueTranscript HttpGateway::ask(const std::string& request_text, int round_index) {
    const std::string hash = prompt_hash(request_text, config_.model, round_index);
    if (config_.use_cache) {
        if (auto hit = cache_lookup(config_.cache_dir, hash)) return *hit;
    }

    // Split base_url into host part and path prefix.
    std::string host = config_.base_url;
    std::string prefix;
    const auto scheme = host.find("://");
    const auto path_pos = host.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (path_pos != std::string::npos) {
        prefix = host.substr(path_pos);
        host = host.substr(0, path_pos);
    }
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

    nlohmann::json body = {
        {"model", config_.model},
        {"temperature", config_.temperature},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request_text}}})},
    };
    httplib::Headers headers;
    if (!config_.api_key.empty())
        headers.emplace("Authorization", "Bearer " + config_.api_key);

    const auto start = std::chrono::steady_clock::now();
    std::string error;
    for (int attempt = 0; attempt < config_.max_retries; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(std::chrono::seconds(1 << (attempt - 1)));
        httplib::Client client(host);
        client.set_read_timeout(120, 0);
        auto res = client.Post(prefix + "/chat/completions", headers, body.dump(),
                               "application/json");
        if (!res) {
            error = "transport failure";
            continue;
        }
        if (res->status == 429) {
            error = "rate limited";
            continue;
        }
        if (res->status != 200) {
            error = "HTTP " + std::to_string(res->status);
            continue;
        }
        nlohmann::json reply;
        try {
            reply = nlohmann::json::parse(res->body);
        } catch (const std::exception& e) {
            throw GatewayError(std::string("malformed completion response: ") + e.what());
        }
        DialogueTranscript t;
        t.prompt_hash = hash;
        t.request_text = request_text;
        t.response_text =
            reply.at("choices").at(0).at("message").at("content").get<std::string>();
        t.model_id = config_.model;
        t.round_index = round_index;
        t.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - start)
                           .count();
        if (config_.use_cache) cache_store(config_.cache_dir, t);
        return t;
    }
    throw GatewayError("gateway request failed after " +
                       std::to_string(config_.max_retries) + " attempts: " + error);
}

CommitChoice extract_commit_choice(const std::string& response,
                                   const std::set<std::string>& valid) {
    if (valid.empty()) throw ContractError("extract_commit_choice: empty valid set");

    static const std::regex answer_re("<answer>([\\s\\S]*?)</answer>", std::regex::icase);
    static const std::regex hex_re("[0-9a-f]{7,40}");

    std::vector<std::string> tokens;
    auto collect = [&](const std::string& text) {
        for (auto it = std::sregex_iterator(text.begin(), text.end(), hex_re);
             it != std::sregex_iterator(); ++it) {
            // Reject tokens embedded in a longer identifier.
            const auto pos = static_cast<std::size_t>(it->position());
            const auto end = pos + static_cast<std::size_t>(it->length());
            auto word_char = [](char c) {
                return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
            };
            if (pos > 0 && word_char(text[pos - 1])) continue;
            if (end < text.size() && word_char(text[end])) continue;
            tokens.push_back(it->str());
        }
    };
    for (auto it = std::sregex_iterator(response.begin(), response.end(), answer_re);
         it != std::sregex_iterator(); ++it)
        collect(it->str(1));
    collect(response);

    bool saw_token = false;
    for (const auto& token : tokens) {
        saw_token = true;
        std::vector<std::string> matches;
        for (const auto& member : valid) {
            const bool hit = token.size() <= member.size()
                                 ? member.compare(0, token.size(), token) == 0
                                 : token.compare(0, member.size(), member) == 0;
            if (hit) matches.push_back(member);
        }
        if (matches.size() == 1) return matches.front();
        if (matches.size() > 1) return Abstain{AbstainReason::ambiguous_prefix};
    }
    return Abstain{saw_token ? AbstainReason::invalid_candidate
                             : AbstainReason::none_found};
}

}  // namespace patchscout
