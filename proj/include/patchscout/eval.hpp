#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

namespace patchscout {

struct EvalRecord {
    std::string cve_id;
    std::vector<std::string> predicted;  // ranked when Top-K is requested
    std::set<std::string> truth;         // non-empty
    bool ranked = false;
};

struct PerCveScore {
    std::string cve_id;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool hit = false;
};

struct EvalReport {
    std::vector<PerCveScore> per_cve;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    int accuracy_count = 0;
    double accuracy_pct = 0.0;
    std::optional<int> k;
};

struct CandidateStats {
    std::size_t count = 0;
    double mean = 0.0;
    double median = 0.0;
    double std_dev = 0.0;   // population
    double skewness = 0.0;  // population g1 = m3 / m2^1.5
    double q1 = 0.0;
    double q3 = 0.0;
    long long min = 0;
    long long max = 0;
};

// Per-CVE macro-averaged precision/recall/F1; optional Top-K truncation
// (requires ranked predictions). Empty prediction sets score P = 0.
EvalReport score(const std::vector<EvalRecord>& records, std::optional<int> k = {});

CandidateStats candidate_stats(const std::vector<long long>& counts);

enum class ReportFormat { json, markdown, csv };

std::string emit_report(const EvalReport& report, ReportFormat format);
std::string emit_report(const CandidateStats& stats, ReportFormat format);

nlohmann::json eval_report_to_json(const EvalReport& report);

// Predictions file: NDJSON {cve_id, predicted: [...], truth: [...]}.
std::vector<EvalRecord> load_predictions(const std::filesystem::path& path);

}  // namespace patchscout
