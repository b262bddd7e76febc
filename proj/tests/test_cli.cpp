#include <doctest.h>

#include <cstdlib>
#include <fstream>

#include <json.hpp>

#include "patchscout/git.hpp"
#include "support/fixtures.hpp"

using namespace patchscout;
using patchscout::testing::FixtureRepo;
using patchscout::testing::TempDir;

namespace fs = std::filesystem;

namespace {

CommandResult cli(std::vector<std::string> args, const fs::path& cwd) {
    const char* bin = std::getenv("PATCHSCOUT_BIN");
    REQUIRE_MESSAGE(bin != nullptr, "PATCHSCOUT_BIN must point at the built binary");
    std::vector<std::string> argv{bin};
    argv.insert(argv.end(), args.begin(), args.end());
    return run_command(argv, cwd);
}

void write_file(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << text;
}

// Two-commit fixture: a planted fix plus noise between v1.0 and v1.1.
struct LocateFixture {
    TempDir tmp;
    fs::path repo_dir;
    fs::path dataset;
    std::string fix_hash;

    LocateFixture() {
        repo_dir = tmp.path() / "repo";
        FixtureRepo fix(repo_dir);
        fix.write("src/auth.py", "def check(token):\n    return token\n");
        fix.commit("base");
        fix.tag("v1.0");
        fix.write("src/auth.py", "def check(token):\n    return validate(token)\n");
        fix_hash = fix.commit("Fix token validation bypass");
        fix.write("README.md", "docs\n");
        fix.commit("Update docs");
        fix.tag("v1.1");

        dataset = tmp.path() / "dataset.ndjson";
        write_file(dataset,
                   R"({"cve_id":"CVE-2021-1111","description":"token validation bypass",)"
                   R"("package_name":"demo/demo","update_to_version":"1.1"})"
                   "\n");
    }

    std::vector<std::string> base_args(const std::string& script_name) const {
        return {"locate",        "CVE-2021-1111",
                "--repo",        repo_dir.string(),
                "--dataset",     dataset.string(),
                "--provider",    "mock",
                "--mock-script", (tmp.path() / script_name).string(),
                "--cache-dir",   (tmp.path() / "cache").string(),
                "--out-dir",     (tmp.path() / "out").string(),
                "--rounds",      "3"};
    }
};

}  // namespace

TEST_CASE("locate resolves the planted fix with a scripted provider") {
    LocateFixture fx;
    write_file(fx.tmp.path() / "script.ndjson",
               R"({"match":"*","response":"<answer>)" + fx.fix_hash.substr(0, 7) +
                   R"(</answer>","repeat":true})" "\n");
    const auto res = cli(fx.base_args("script.ndjson"), fx.tmp.path());
    CAPTURE(res.output);
    CHECK(res.exit_code == 0);
    CHECK(res.output.find(fx.fix_hash) != std::string::npos);

    for (const char* name :
         {"patch_result.json", "vote_tally.json", "candidate_set.json", "manifest.json",
          "summary.txt"})
        CHECK(fs::exists(fx.tmp.path() / "out" / name));

    std::ifstream in(fx.tmp.path() / "out" / "patch_result.json");
    nlohmann::json result = nlohmann::json::parse(in);
    REQUIRE(result["final_set"].size() >= 1);
    CHECK(result["core"][0] == fx.fix_hash);
}

TEST_CASE("locate exits 2 when every round abstains") {
    LocateFixture fx;
    write_file(fx.tmp.path() / "script.ndjson",
               R"({"match":"*","response":"cannot tell","repeat":true})" "\n");
    const auto res = cli(fx.base_args("script.ndjson"), fx.tmp.path());
    CAPTURE(res.output);
    CHECK(res.exit_code == 2);
}

TEST_CASE("locate exits 1 for a record missing from the dataset") {
    LocateFixture fx;
    write_file(fx.tmp.path() / "script.ndjson",
               R"({"match":"*","response":"x","repeat":true})" "\n");
    auto args = fx.base_args("script.ndjson");
    args[1] = "CVE-2021-9999";
    const auto res = cli(args, fx.tmp.path());
    CHECK(res.exit_code == 1);
    CHECK(res.output.find("vuln_intel") != std::string::npos);
}

TEST_CASE("eval scores a predictions file and writes reports") {
    TempDir tmp;
    const auto predictions = tmp.path() / "preds.ndjson";
    write_file(predictions,
               R"({"cve_id":"CVE-2020-0001","predicted":["a"],"truth":["a"]})" "\n"
               R"({"cve_id":"CVE-2020-0002","predicted":["x","b"],"truth":["b"]})" "\n");
    const auto res = cli({"eval", predictions.string(), "--k", "1", "--out-dir",
                          (tmp.path() / "out").string()},
                         tmp.path());
    CAPTURE(res.output);
    CHECK(res.exit_code == 0);
    // Macro P = (1 + 0.5)/2, R = 1.
    CHECK(res.output.find("| 0.7500 | 1.0000 |") != std::string::npos);
    for (const char* name : {"report.json", "report.md", "report.csv",
                             "report_top1.json", "report_top1.md", "report_top1.csv"})
        CHECK(fs::exists(tmp.path() / "out" / name));
    // Top-1 keeps only the first prediction of each record.
    CHECK(res.output.find("| 0.5000 | 0.5000 |") != std::string::npos);
}

TEST_CASE("eval reports the failing line of a malformed predictions file") {
    TempDir tmp;
    const auto predictions = tmp.path() / "preds.ndjson";
    write_file(predictions,
               R"({"cve_id":"CVE-2020-0001","predicted":["a"],"truth":["a"]})" "\n"
               "this is not json\n");
    const auto res = cli({"eval", predictions.string(), "--out-dir",
                          (tmp.path() / "out").string()},
                         tmp.path());
    CHECK(res.exit_code == 1);
    CHECK(res.output.find("line 2") != std::string::npos);
}

TEST_CASE("eval rejects an empty predictions file") {
    TempDir tmp;
    const auto predictions = tmp.path() / "empty.ndjson";
    write_file(predictions, "");
    const auto res = cli({"eval", predictions.string()}, tmp.path());
    CHECK(res.exit_code == 1);
    CHECK(res.output.find("empty") != std::string::npos);
}

TEST_CASE("stats summarizes candidate counts across local clones") {
    TempDir tmp;
    const fs::path repos = tmp.path() / "repos";
    const int counts[] = {2, 4, 6};
    const char* names[] = {"alpha", "beta", "gamma"};
    for (int r = 0; r < 3; ++r) {
        FixtureRepo fix(repos / ("o_" + std::string(names[r])));
        fix.write("f", "0");
        fix.commit("base");
        fix.tag("v1.0");
        for (int i = 0; i < counts[r]; ++i) {
            fix.write("f", std::to_string(i + 1));
            fix.commit("work " + std::to_string(i));
        }
        fix.tag("v1.1");
    }
    std::string dataset_text;
    for (int r = 0; r < 3; ++r)
        dataset_text += R"({"cve_id":"CVE-2022-000)" + std::to_string(r + 1) +
                        R"(","description":"d","package_name":"o/)" + names[r] +
                        R"(","update_to_version":"1.1"})" "\n";
    dataset_text += R"({"cve_id":"CVE-2022-0004","description":"d",)"
                    R"("package_name":"o/missing","update_to_version":"1.1"})" "\n";
    const auto dataset = tmp.path() / "dataset.ndjson";
    write_file(dataset, dataset_text);

    const auto res = cli({"stats", dataset.string(), "--repos-dir", repos.string(),
                          "--out-dir", (tmp.path() / "out").string()},
                         tmp.path());
    CAPTURE(res.output);
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("| 3 | 4.0000 | 4.0000 |") != std::string::npos);
    CHECK(res.output.find("skipped: 1") != std::string::npos);
    REQUIRE(fs::exists(tmp.path() / "out" / "stats.json"));
    std::ifstream in(tmp.path() / "out" / "stats.json");
    nlohmann::json stats = nlohmann::json::parse(in);
    CHECK(stats["mean"].get<double>() == doctest::Approx(4.0));
    CHECK(stats["min"].get<long long>() == 2);
    CHECK(stats["max"].get<long long>() == 6);
}

TEST_CASE("cache inspect and clear") {
    TempDir tmp;
    const fs::path cache = tmp.path() / "cache";
    write_file(cache / "llm" / "abc.json", "{}");
    write_file(cache / "vuln" / "nvd" / "CVE-2020-0001.json", "{}");
    fs::create_directories(cache / "repos" / "o__n");

    const auto inspect = cli({"cache", "inspect", "--cache-dir", cache.string()},
                             tmp.path());
    CHECK(inspect.exit_code == 0);
    CHECK(inspect.output.find("llm transcripts: 1") != std::string::npos);
    CHECK(inspect.output.find("vulnerability records: 1") != std::string::npos);
    CHECK(inspect.output.find("repository clones: 1") != std::string::npos);

    const auto clear = cli({"cache", "clear", "--cache-dir", cache.string()}, tmp.path());
    CHECK(clear.exit_code == 0);
    CHECK_FALSE(fs::exists(cache / "llm"));
    CHECK_FALSE(fs::exists(cache / "repos"));

    const auto bogus = cli({"cache", "prune", "--cache-dir", cache.string()}, tmp.path());
    CHECK(bogus.exit_code == 1);
}

TEST_CASE("config file values apply, explicit flags win") {
    TempDir tmp;
    const auto predictions = tmp.path() / "preds.ndjson";
    write_file(predictions,
               R"({"cve_id":"CVE-2020-0001","predicted":["a"],"truth":["a"]})" "\n");
    const auto config = tmp.path() / "run.conf";
    write_file(config,
               "# comment line\n"
               "out_dir = " + (tmp.path() / "from_config").string() + "\n"
               "rounds = 5\n"
               "ignored_future_key = 1\n");

    const auto from_config =
        cli({"eval", predictions.string(), "--config", config.string()}, tmp.path());
    CHECK(from_config.exit_code == 0);
    CHECK(fs::exists(tmp.path() / "from_config" / "report.json"));

    const auto overridden =
        cli({"eval", predictions.string(), "--config", config.string(), "--out-dir",
             (tmp.path() / "from_flag").string()},
            tmp.path());
    CHECK(overridden.exit_code == 0);
    CHECK(fs::exists(tmp.path() / "from_flag" / "report.json"));
}

TEST_CASE("running without a subcommand fails") {
    TempDir tmp;
    const auto res = cli({}, tmp.path());
    CHECK(res.exit_code != 0);
}
