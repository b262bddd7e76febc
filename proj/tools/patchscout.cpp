#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include <CLI11.hpp>

#include "patchscout/code_context.hpp"
#include "patchscout/errors.hpp"
#include "patchscout/pipeline.hpp"

namespace fs = std::filesystem;
using namespace patchscout;

namespace {

void add_global_options(CLI::App& cmd, RunConfig& config, std::string& config_file) {
    cmd.add_option("--cache-dir", config.cache_dir, "Cache directory");
    cmd.add_option("--out-dir", config.out_dir, "Output directory");
    cmd.add_option("--config", config_file, "Flat key=value config file");
    cmd.add_option("--seed", config.seed, "Seed for the optional per-round shuffle");
    cmd.add_option("--mock-script", config.mock_script, "NDJSON mock transcript script");
    cmd.add_option("--batch-size", config.batch_size, "Commits per LLM batch")
        ->check(CLI::Range(2, 1000));
    cmd.add_option("--rounds", config.rounds, "Voting rounds")->check(CLI::Range(1, 10000));
    cmd.add_flag("--literal-algorithm1", config.literal_algorithm,
                 "Extend all trailing commits instead of a final selection query");
    cmd.add_option("--jobs", config.jobs, "Worker bound (0 = hardware concurrency)");
    cmd.add_option("--max-candidates", config.max_candidates, "Candidate cap");
    cmd.add_option("--token-budget", config.token_budget, "Prompt token budget");
    cmd.add_option("--model", config.model_id, "Model id for live calls");
    cmd.add_option("--temperature", config.temperature, "Sampling temperature");
    cmd.add_option("--templates-dir", config.templates_dir, "Prompt template directory");
    cmd.add_option("--dataset", config.dataset, "Local NDJSON vulnerability dataset");
    cmd.add_option("--source", config.record_source,
                   "Vulnerability record source: nvd, osv, local_cache");
    cmd.add_option("--base-url", config.base_url, "LLM provider base URL");
    cmd.add_option("--provider", [&config](const CLI::results_t& values) {
        const std::string& v = values.front();
        if (v == "live") config.provider = ProviderMode::live;
        else if (v == "mock") config.provider = ProviderMode::mock;
        else if (v == "replay") config.provider = ProviderMode::replay;
        else return false;
        return true;
    }, "Provider mode: live, mock, replay");
    cmd.add_flag("--shuffle", config.shuffle, "Shuffle batches per round (seeded)");
    cmd.add_flag("--no-cache", config.no_cache, "Bypass the transcript disk cache");
    cmd.add_flag("--refresh", config.refresh, "Re-fetch cached repository clones");
}

int cmd_locate(const std::string& cve_id, const std::string& repo_spec,
               const RunConfig& config) {
    try {
        const LocateOutcome outcome = locate(cve_id, repo_spec, config);
        std::ifstream summary(config.out_dir / "summary.txt");
        std::cout << summary.rdbuf();
        return outcome.result.final_set.empty() ? 2 : 0;
    } catch (const NoTagError& e) {
        std::cerr << "repo_miner: " << e.what() << "\n";
        for (const auto& near : e.nearest) std::cerr << "  nearest tag: " << near << "\n";
        std::cerr << "hint: check the fixed-version value or pass a refreshed clone\n";
        return 1;
    } catch (const NotFoundError& e) {
        std::cerr << "vuln_intel: " << e.what() << "\n";
        std::cerr << "hint: add the record to the dataset or select another source\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_eval(const fs::path& predictions, const std::vector<int>& ks,
             const RunConfig& config) {
    try {
        const auto records = load_predictions(predictions);
        if (records.empty()) {
            std::cerr << "error: predictions file is empty\n";
            return 1;
        }
        fs::create_directories(config.out_dir);
        auto emit_all = [&](const EvalReport& report, const std::string& stem) {
            std::ofstream(config.out_dir / (stem + ".json"))
                << emit_report(report, ReportFormat::json);
            std::ofstream(config.out_dir / (stem + ".md"))
                << emit_report(report, ReportFormat::markdown);
            std::ofstream(config.out_dir / (stem + ".csv"))
                << emit_report(report, ReportFormat::csv);
            std::cout << stem << ":\n" << emit_report(report, ReportFormat::markdown);
        };
        emit_all(score(records), "report");
        for (int k : ks) emit_all(score(records, k), "report_top" + std::to_string(k));
        return 0;
    } catch (const Error& e) {
        std::cerr << "eval_harness: " << e.what() << "\n";
        return 1;
    }
}

int cmd_stats(const fs::path& dataset, const fs::path& repos_dir,
              const RunConfig& config) {
    try {
        const auto loaded = load_dataset(dataset);
        if (loaded.records.empty()) {
            std::cerr << "error: dataset is empty\n";
            return 1;
        }
        std::vector<long long> counts;
        int skipped = 0;
        for (const auto& record : loaded.records) {
            try {
                const auto hints = extract_version_hints(record);
                if (hints.empty()) throw NotFoundError("no version hints");
                // repos/<owner>__<name> layout, falling back to the bare name.
                std::string slug = hints.front().repo;
                for (auto& c : slug)
                    if (c == '/') c = '_';
                fs::path repo_path = repos_dir / slug;
                if (!fs::exists(repo_path)) {
                    auto pos = hints.front().repo.find('/');
                    repo_path = repos_dir / hints.front().repo.substr(pos + 1);
                }
                GitRepo repo(repo_path);
                const auto tags = list_tags(repo);
                std::set<std::string> hashes;
                for (const auto& hint : hints) {
                    const VersionTag fixed = match_fixed_tag(hint, tags);
                    for (const auto& commit : commit_range(repo, fixed, tags).commits)
                        hashes.insert(commit.hash);
                }
                counts.push_back(static_cast<long long>(hashes.size()));
            } catch (const Error&) {
                ++skipped;
            }
        }
        if (counts.empty()) {
            std::cerr << "error: no CVE resolved (" << skipped << " skipped)\n";
            return 1;
        }
        const CandidateStats stats = candidate_stats(counts);
        fs::create_directories(config.out_dir);
        std::ofstream(config.out_dir / "stats.json")
            << emit_report(stats, ReportFormat::json);
        std::cout << emit_report(stats, ReportFormat::markdown);
        std::cout << "skipped: " << skipped << "\n";
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_cache(const std::string& action, const RunConfig& config) {
    const fs::path llm = config.cache_dir / "llm";
    const fs::path vuln = config.cache_dir / "vuln";
    const fs::path repos = config.cache_dir / "repos";
    if (action == "inspect") {
        auto count = [](const fs::path& dir) {
            if (!fs::exists(dir)) return static_cast<std::size_t>(0);
            std::size_t n = 0;
            for (auto it = fs::recursive_directory_iterator(dir);
                 it != fs::recursive_directory_iterator(); ++it)
                if (it->is_regular_file()) ++n;
            return n;
        };
        std::cout << "llm transcripts: " << count(llm) << "\n";
        std::cout << "vulnerability records: " << count(vuln) << "\n";
        std::cout << "repository clones: "
                  << (fs::exists(repos) ? std::distance(fs::directory_iterator(repos),
                                                        fs::directory_iterator{})
                                        : 0)
                  << "\n";
        return 0;
    }
    if (action == "clear") {
        for (const auto& dir : {llm, vuln, repos}) fs::remove_all(dir);
        std::cout << "cache cleared\n";
        return 0;
    }
    std::cerr << "unknown cache action: " << action << " (use inspect or clear)\n";
    return 1;
}

// --config is honored before CLI11 parsing so explicit flags override it.
void preapply_config(int argc, char** argv, RunConfig& config) {
    for (int i = 1; i < argc - 1; ++i)
        if (std::string(argv[i]) == "--config") apply_config_file(config, argv[i + 1]);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CVE patch commit localization"};
    app.require_subcommand(1);

    RunConfig config;
    preapply_config(argc, argv, config);
    std::string config_file;

    auto* locate_cmd = app.add_subcommand("locate", "Locate the patch commit for a CVE");
    std::string cve_id, repo_spec;
    locate_cmd->add_option("cve_id", cve_id, "CVE identifier")->required();
    locate_cmd->add_option("--repo", repo_spec, "Repository path or clone URL")->required();
    add_global_options(*locate_cmd, config, config_file);

    auto* eval_cmd = app.add_subcommand("eval", "Score predictions against ground truth");
    fs::path predictions;
    std::vector<int> ks;
    eval_cmd->add_option("predictions", predictions, "NDJSON predictions file")->required();
    eval_cmd->add_option("--k", ks, "Top-K cutoffs");
    add_global_options(*eval_cmd, config, config_file);

    auto* stats_cmd = app.add_subcommand("stats", "Candidate-count distribution statistics");
    fs::path dataset, repos_dir;
    stats_cmd->add_option("dataset_file", dataset, "NDJSON vulnerability dataset")
        ->required();
    stats_cmd->add_option("--repos-dir", repos_dir, "Directory of local clones")->required();
    add_global_options(*stats_cmd, config, config_file);

    auto* cache_cmd = app.add_subcommand("cache", "Inspect or clear the cache");
    std::string cache_action;
    cache_cmd->add_option("action", cache_action, "inspect | clear")->required();
    add_global_options(*cache_cmd, config, config_file);

    CLI11_PARSE(app, argc, argv);

    if (locate_cmd->parsed()) return cmd_locate(cve_id, repo_spec, config);
    if (eval_cmd->parsed()) return cmd_eval(predictions, ks, config);
    if (stats_cmd->parsed()) return cmd_stats(dataset, repos_dir, config);
    if (cache_cmd->parsed()) return cmd_cache(cache_action, config);
    return 1;
}
