#include "patchscout/pipeline.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "patchscout/code_context.hpp"
#include "patchscout/errors.hpp"

namespace patchscout {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// Cache-only gateway for replay runs; a miss is an error.
class ReplayGateway : public Gateway {
public:
    ReplayGateway(std::filesystem::path cache_dir, std::string model)
        : cache_dir_(std::move(cache_dir)), model_(std::move(model)) {}

    DialogueTranscript ask(const std::string& request_text, int round_index) override {
        const std::string hash = prompt_hash(request_text, model_, round_index);
        if (auto hit = cache_lookup(cache_dir_, hash)) return *hit;
        throw GatewayError("replay miss: no cached transcript " + hash);
    }
    std::string model_id() const override { return model_; }

private:
    std::filesystem::path cache_dir_;
    std::string model_;
};

}  // namespace

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path.string());
    std::string line;
    while (std::getline(in, line)) {
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ParseError("config line without '=': " + t);
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key == "cache_dir") config.cache_dir = value;
        else if (key == "out_dir") config.out_dir = value;
        else if (key == "batch_size") config.batch_size = std::stoi(value);
        else if (key == "rounds") config.rounds = std::stoi(value);
        else if (key == "max_candidates") config.max_candidates = std::stoul(value);
        else if (key == "token_budget") config.token_budget = std::stoi(value);
        else if (key == "model_id") config.model_id = value;
        else if (key == "temperature") config.temperature = std::stod(value);
        else if (key == "seed") config.seed = static_cast<unsigned>(std::stoul(value));
        else if (key == "provider") {
            if (value == "live") config.provider = ProviderMode::live;
            else if (value == "mock") config.provider = ProviderMode::mock;
            else if (value == "replay") config.provider = ProviderMode::replay;
            else throw ParseError("unknown provider: " + value);
        } else if (key == "mock_script") config.mock_script = value;
        else if (key == "dataset") config.dataset = value;
        else if (key == "templates_dir") config.templates_dir = value;
        else if (key == "record_source") config.record_source = value;
        else if (key == "nvd_base_url") config.nvd_base_url = value;
        else if (key == "osv_base_url") config.osv_base_url = value;
        else if (key == "base_url") config.base_url = value;
        else if (key == "jobs") config.jobs = std::stoi(value);
        // Unknown keys are ignored so configs can be shared across versions.
    }
}

std::unique_ptr<Gateway> make_gateway(const RunConfig& config) {
    switch (config.provider) {
        case ProviderMode::mock: {
            if (config.mock_script.empty())
                throw GatewayError("mock provider requires --mock-script");
            return std::make_unique<MockGateway>(
                MockGateway::load_script(config.mock_script));
        }
        case ProviderMode::replay:
            return std::make_unique<ReplayGateway>(config.cache_dir, config.model_id);
        case ProviderMode::live: {
            HttpGatewayConfig http;
            http.base_url = config.base_url;
            http.model = config.model_id;
            http.temperature = config.temperature;
            http.use_cache = !config.no_cache;
            http.cache_dir = config.cache_dir;
            const char* key = std::getenv("PATCHSCOUT_API_KEY");
            if (!key) key = std::getenv("OPENAI_API_KEY");
            if (key) http.api_key = key;
            return std::make_unique<HttpGateway>(std::move(http));
        }
    }
    throw GatewayError("unreachable provider mode");
}

VulnRecord resolve_record(const std::string& cve_id, const RunConfig& config) {
    const std::string id = canonical_cve_id(cve_id);
    if (!config.dataset.empty()) {
        const auto loaded = load_dataset(config.dataset);
        for (const auto& record : loaded.records)
            if (record.cve_id == id) return record;
        throw NotFoundError(id + " not present in dataset " + config.dataset.string());
    }
    FetchConfig fetch;
    fetch.cache_dir = config.cache_dir;
    fetch.nvd_base_url = config.nvd_base_url;
    fetch.osv_base_url = config.osv_base_url;
    VulnSource source = VulnSource::local_cache;
    if (config.record_source == "nvd") source = VulnSource::nvd;
    else if (config.record_source == "osv") source = VulnSource::osv;
    else if (config.record_source != "local_cache")
        throw ParseError("unknown record source: " + config.record_source);
    return fetch_record(id, source, fetch);
}

LocateOutcome locate(const std::string& cve_id, const std::string& repo_spec,
                     const RunConfig& config) {
    const VulnRecord record = resolve_record(cve_id, config);
    const TemplateSet templates = config.templates_dir.empty()
                                      ? TemplateSet::builtin()
                                      : TemplateSet::load(config.templates_dir);
    auto gateway = make_gateway(config);

    std::vector<VersionHint> hints = extract_version_hints(record);
    if (hints.empty())
        hints = llm_extract_version_hints(record, *gateway, templates);
    if (hints.empty())
        throw NotFoundError("no version hints derivable for " + record.cve_id);

    GitRepo repo = GitRepo::clone_or_open(repo_spec, config.cache_dir, config.refresh);
    const auto tags = list_tags(repo);

    BuildOptions build_options;
    build_options.max_candidates = config.max_candidates;
    CandidateSet candidates = build_candidates(record, hints, repo, build_options);

    std::map<std::string, std::vector<FunctionContext>> contexts;
    for (const auto& commit : candidates.commits)
        contexts[commit.hash] = commit_contexts(commit, repo).contexts;

    VoteOptions vote_options;
    vote_options.batch_size = config.batch_size;
    vote_options.rounds = config.rounds;
    vote_options.literal_algorithm = config.literal_algorithm;
    vote_options.token_budget = config.token_budget;
    if (config.shuffle) vote_options.shuffle_seed = config.seed;
    PromptInputs inputs{&record, &contexts, &templates};
    VoteTally tally = run_votes(candidates, vote_options, *gateway, inputs);

    // Expansion database around the first resolved fixed tag.
    std::vector<CommitRecord> db;
    std::optional<VersionTag> fixed_tag;
    if (!candidates.version_pairs.empty()) {
        for (const auto& tag : tags)
            if (tag.name == candidates.version_pairs.front().second) fixed_tag = tag;
    }
    if (fixed_tag) db = build_search_db(repo, *fixed_tag, tags);

    std::vector<CommitRecord> core_commits;
    for (const auto& commit : candidates.commits)
        for (const auto& winner : tally.winners)
            if (commit.hash == winner) core_commits.push_back(commit);

    PatchResult result;
    if (!tally.winners.empty()) {
        result = expand(tally.winners, core_commits, db, record);
    } else {
        result.cve_id = record.cve_id;
    }

    std::filesystem::create_directories(config.out_dir);
    auto write = [&](const std::string& name, const std::string& text) {
        std::ofstream out(config.out_dir / name, std::ios::binary);
        out << text;
    };
    write("patch_result.json", patch_result_to_json(result).dump(2) + "\n");
    write("vote_tally.json", vote_tally_to_json(tally).dump(2) + "\n");
    write("candidate_set.json", candidate_set_to_json(candidates).dump(2) + "\n");

    nlohmann::json manifest;
    manifest["cve_id"] = record.cve_id;
    manifest["repo"] = repo_spec;
    manifest["batch_size"] = config.batch_size;
    manifest["rounds"] = config.rounds;
    manifest["max_candidates"] = config.max_candidates;
    manifest["token_budget"] = config.token_budget;
    manifest["model_id"] = config.model_id;
    manifest["temperature"] = config.temperature;
    manifest["seed"] = config.seed;
    manifest["literal_algorithm"] = config.literal_algorithm;
    manifest["provider"] = config.provider == ProviderMode::live    ? "live"
                           : config.provider == ProviderMode::mock ? "mock"
                                                                   : "replay";
    manifest["record_hash"] = prompt_hash(vuln_record_to_json(record).dump(), "record", 0);
    manifest["tool_version"] = "0.1.0";
    write("manifest.json", manifest.dump(2) + "\n");

    std::ostringstream summary;
    summary << record.cve_id << " in " << repo_spec << "\n";
    summary << "candidates: " << candidates.commits.size() << "\n";
    summary << "votes:";
    for (const auto& [hash, count] : tally.votes)
        summary << ' ' << hash.substr(0, 7) << '=' << count;
    summary << "\nabstentions: " << tally.abstentions << "\n";
    summary << "final set:";
    for (const auto& hash : result.final_set) summary << ' ' << hash;
    summary << "\n";
    write("summary.txt", summary.str());

    return LocateOutcome{std::move(result), std::move(tally), std::move(candidates)};
}

}  // namespace patchscout
