#include <doctest.h>

#include <atomic>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "patchscout/errors.hpp"
#include "patchscout/gateway.hpp"
#include "support/fixtures.hpp"

using namespace patchscout;
using patchscout::testing::TempDir;

TEST_CASE("prompt hash is stable and round-sensitive") {
    const auto a = prompt_hash("prompt", "model", 0);
    CHECK(a == prompt_hash("prompt", "model", 0));
    CHECK(a != prompt_hash("prompt", "model", 1));
    CHECK(a != prompt_hash("prompt", "other", 0));
    CHECK(a != prompt_hash("other", "model", 0));
}

TEST_CASE("mock gateway follows the script") {
    MockGateway gw({{"*", "<answer>abc1234</answer>", false, false}});
    const auto t = gw.ask("anything", 0);
    CHECK(t.response_text == "<answer>abc1234</answer>");
    CHECK_THROWS_AS(gw.ask("anything", 1), ScriptError);
}

TEST_CASE("mock gateway match precedence and repeat entries") {
    MockGateway gw({{"special", "matched", true, false}, {"*", "fallback", true, false}});
    CHECK(gw.ask("with special marker", 0).response_text == "matched");
    CHECK(gw.ask("plain", 0).response_text == "fallback");
    CHECK(gw.ask("special again", 1).response_text == "matched");
}

TEST_CASE("mock script file parsing") {
    TempDir tmp;
    const auto path = tmp.path() / "script.ndjson";
    {
        std::ofstream out(path);
        out << R"({"match":"*","response":"hello"})" << "\n";
        out << R"({"response":"second","repeat":true})" << "\n";
    }
    auto gw = MockGateway::from_script(path);
    CHECK(gw.ask("x", 0).response_text == "hello");
    CHECK(gw.ask("x", 0).response_text == "second");
    CHECK(gw.ask("x", 1).response_text == "second");
}

TEST_CASE("extract_commit_choice") {
    const std::string full_a = "abc1234" + std::string(33, '0');
    const std::string full_b = "def5678" + std::string(33, '1');
    const std::set<std::string> valid{full_a, full_b};

    SUBCASE("answer tag exact member") {
        const auto choice = extract_commit_choice("<answer>abc1234</answer>", valid);
        REQUIRE(std::holds_alternative<std::string>(choice));
        CHECK(std::get<std::string>(choice) == full_a);
    }
    SUBCASE("free text fallback without answer tag") {
        const auto choice =
            extract_commit_choice("I think the patch is def5678 because it fixes it.",
                                  valid);
        REQUIRE(std::holds_alternative<std::string>(choice));
        CHECK(std::get<std::string>(choice) == full_b);
    }
    SUBCASE("unknown candidate abstains") {
        const auto choice = extract_commit_choice("<answer>ffffff1</answer>", valid);
        REQUIRE(std::holds_alternative<Abstain>(choice));
        CHECK(std::get<Abstain>(choice).reason == AbstainReason::invalid_candidate);
    }
    SUBCASE("no hex token abstains") {
        const auto choice = extract_commit_choice("no idea", valid);
        REQUIRE(std::holds_alternative<Abstain>(choice));
        CHECK(std::get<Abstain>(choice).reason == AbstainReason::none_found);
    }
    SUBCASE("ambiguous prefix abstains") {
        const std::string twin_a = "abc1234" + std::string(33, '2');
        const auto choice = extract_commit_choice("<answer>abc1234</answer>",
                                                  {full_a, twin_a});
        REQUIRE(std::holds_alternative<Abstain>(choice));
        CHECK(std::get<Abstain>(choice).reason == AbstainReason::ambiguous_prefix);
    }
    SUBCASE("answer tag wins over earlier free text") {
        const auto choice = extract_commit_choice(
            "maybe def5678?\n<answer>abc1234</answer>", valid);
        REQUIRE(std::holds_alternative<std::string>(choice));
        CHECK(std::get<std::string>(choice) == full_a);
    }
    SUBCASE("never returns an id outside valid") {
        for (const char* text : {"<answer>abc1234</answer>", "fffffff", "deadbee",
                                 "pick def5678 or abc1234"}) {
            const auto choice = extract_commit_choice(text, valid);
            if (const auto* hash = std::get_if<std::string>(&choice))
                CHECK(valid.count(*hash) == 1);
        }
    }
}

namespace {

// Counting chat-completion stub on a local port.
struct StubServer {
    httplib::Server server;
    std::atomic<int> requests{0};
    int port = 0;
    std::thread thread;

    StubServer() {
        server.Post("/v1/chat/completions",
                    [this](const httplib::Request&, httplib::Response& res) {
                        ++requests;
                        nlohmann::json reply = {
                            {"choices",
                             {{{"message",
                                {{"role", "assistant"},
                                 {"content", "<answer>abc1234</answer>"}}}}}}};
                        res.set_content(reply.dump(), "application/json");
                    });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~StubServer() {
        server.stop();
        thread.join();
    }
};

}  // namespace

TEST_CASE("http gateway caches by (prompt, round)") {
    StubServer stub;
    TempDir tmp;
    HttpGatewayConfig config;
    config.base_url = "http://127.0.0.1:" + std::to_string(stub.port) + "/v1";
    config.cache_dir = tmp.path();
    HttpGateway gw(config);

    const auto first = gw.ask("prompt text", 0);
    CHECK(stub.requests == 1);
    const auto again = gw.ask("prompt text", 0);
    CHECK(stub.requests == 1);  // served from disk cache
    CHECK(again.response_text == first.response_text);

    gw.ask("prompt text", 1);
    CHECK(stub.requests == 2);  // distinct round misses
}

TEST_CASE("no-cache forces upstream requests") {
    StubServer stub;
    TempDir tmp;
    HttpGatewayConfig config;
    config.base_url = "http://127.0.0.1:" + std::to_string(stub.port) + "/v1";
    config.cache_dir = tmp.path();
    config.use_cache = false;
    HttpGateway gw(config);
    gw.ask("p", 0);
    gw.ask("p", 0);
    CHECK(stub.requests == 2);
}

TEST_CASE("cache round-trip preserves the transcript") {
    TempDir tmp;
    DialogueTranscript t;
    t.prompt_hash = prompt_hash("req", "m", 3);
    t.request_text = "req";
    t.response_text = "resp";
    t.model_id = "m";
    t.latency_ms = 12;
    t.round_index = 3;
    cache_store(tmp.path(), t);
    const auto loaded = cache_lookup(tmp.path(), t.prompt_hash);
    REQUIRE(loaded.has_value());
    CHECK(loaded->response_text == "resp");
    CHECK(loaded->round_index == 3);
}
