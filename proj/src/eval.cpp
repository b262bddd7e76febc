#include "patchscout/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "patchscout/errors.hpp"
#include "patchscout/vuln.hpp"

namespace patchscout {

EvalReport score(const std::vector<EvalRecord>& records, std::optional<int> k) {
    if (records.empty()) throw ContractError("score requires at least one record");

    EvalReport report;
    report.k = k;
    for (const auto& record : records) {
        if (record.truth.empty())
            throw ContractError("empty truth set for " + record.cve_id);
        if (k && !record.ranked)
            throw ContractError("Top-K scoring requires ranked predictions (" +
                                record.cve_id + ")");

        std::vector<std::string> predicted = record.predicted;
        if (k && predicted.size() > static_cast<std::size_t>(*k))
            predicted.resize(static_cast<std::size_t>(*k));
        const std::set<std::string> pred_set(predicted.begin(), predicted.end());

        std::size_t correct = 0;
        for (const auto& p : pred_set)
            if (record.truth.count(p)) ++correct;

        PerCveScore s;
        s.cve_id = record.cve_id;
        s.precision = pred_set.empty()
                          ? 0.0
                          : static_cast<double>(correct) / static_cast<double>(pred_set.size());
        s.recall = static_cast<double>(correct) / static_cast<double>(record.truth.size());
        s.f1 = s.precision + s.recall > 0.0
                   ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
                   : 0.0;
        s.hit = correct >= 1;
        report.per_cve.push_back(std::move(s));
    }
    const double n = static_cast<double>(report.per_cve.size());
    for (const auto& s : report.per_cve) {
        report.macro_precision += s.precision / n;
        report.macro_recall += s.recall / n;
        report.macro_f1 += s.f1 / n;
        if (s.hit) ++report.accuracy_count;
    }
    report.accuracy_pct = 100.0 * report.accuracy_count / n;
    return report;
}

CandidateStats candidate_stats(const std::vector<long long>& counts) {
    if (counts.empty()) throw ContractError("candidate_stats requires counts");

    std::vector<long long> sorted = counts;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();

    CandidateStats stats;
    stats.count = n;
    stats.min = sorted.front();
    stats.max = sorted.back();

    double sum = 0.0;
    for (long long v : sorted) sum += static_cast<double>(v);
    stats.mean = sum / static_cast<double>(n);

    double m2 = 0.0, m3 = 0.0;
    for (long long v : sorted) {
        const double d = static_cast<double>(v) - stats.mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= static_cast<double>(n);
    m3 /= static_cast<double>(n);
    stats.std_dev = std::sqrt(m2);
    stats.skewness = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;

    // Quantiles by linear interpolation over sorted order (p*(n-1)).
    auto quantile = [&](double p) {
        const double pos = p * static_cast<double>(n - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = static_cast<std::size_t>(std::ceil(pos));
        const double frac = pos - std::floor(pos);
        return static_cast<double>(sorted[lo]) * (1.0 - frac) +
               static_cast<double>(sorted[hi]) * frac;
    };
    stats.q1 = quantile(0.25);
    stats.median = quantile(0.5);
    stats.q3 = quantile(0.75);
    return stats;
}

namespace {

std::string fixed4(double v) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(4) << v;
    return out.str();
}

std::string fixed1(double v) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(1) << v;
    return out.str();
}

}  // namespace

nlohmann::json eval_report_to_json(const EvalReport& report) {
    nlohmann::json j;
    nlohmann::json per_cve = nlohmann::json::array();
    for (const auto& s : report.per_cve)
        per_cve.push_back({{"cve_id", s.cve_id},
                           {"precision", s.precision},
                           {"recall", s.recall},
                           {"f1", s.f1},
                           {"hit", s.hit}});
    j["per_cve"] = std::move(per_cve);
    j["macro_precision"] = report.macro_precision;
    j["macro_recall"] = report.macro_recall;
    j["macro_f1"] = report.macro_f1;
    j["accuracy_count"] = report.accuracy_count;
    j["accuracy_pct"] = report.accuracy_pct;
    if (report.k) j["k"] = *report.k;
    return j;
}

std::string emit_report(const EvalReport& report, ReportFormat format) {
    switch (format) {
        case ReportFormat::json:
            return eval_report_to_json(report).dump(2) + "\n";
        case ReportFormat::markdown: {
            std::ostringstream out;
            out << "| Precision | Recall | F1 | Accuracy |\n";
            out << "|---|---|---|---|\n";
            out << "| " << fixed4(report.macro_precision) << " | "
                << fixed4(report.macro_recall) << " | " << fixed4(report.macro_f1)
                << " | " << report.accuracy_count << " (" << fixed1(report.accuracy_pct)
                << "%) |\n";
            return out.str();
        }
        case ReportFormat::csv: {
            std::ostringstream out;
            out << "cve_id,precision,recall,f1,hit\n";
            for (const auto& s : report.per_cve)
                out << s.cve_id << ',' << fixed4(s.precision) << ',' << fixed4(s.recall)
                    << ',' << fixed4(s.f1) << ',' << (s.hit ? 1 : 0) << '\n';
            out << "macro," << fixed4(report.macro_precision) << ','
                << fixed4(report.macro_recall) << ',' << fixed4(report.macro_f1) << ','
                << report.accuracy_count << '\n';
            return out.str();
        }
    }
    return {};
}

std::string emit_report(const CandidateStats& stats, ReportFormat format) {
    switch (format) {
        case ReportFormat::json: {
            nlohmann::json j;
            j["count"] = stats.count;
            j["mean"] = stats.mean;
            j["median"] = stats.median;
            j["std"] = stats.std_dev;
            j["skewness"] = stats.skewness;
            j["q1"] = stats.q1;
            j["q3"] = stats.q3;
            j["min"] = stats.min;
            j["max"] = stats.max;
            return j.dump(2) + "\n";
        }
        case ReportFormat::markdown: {
            std::ostringstream out;
            out << "| Count | Mean | Median | Std | Skewness | Q1 | Q3 | Min | Max |\n";
            out << "|---|---|---|---|---|---|---|---|---|\n";
            out << "| " << stats.count << " | " << fixed4(stats.mean) << " | "
                << fixed4(stats.median) << " | " << fixed4(stats.std_dev) << " | "
                << fixed4(stats.skewness) << " | " << fixed4(stats.q1) << " | "
                << fixed4(stats.q3) << " | " << stats.min << " | " << stats.max
                << " |\n";
            return out.str();
        }
        case ReportFormat::csv: {
            std::ostringstream out;
            out << "count,mean,median,std,skewness,q1,q3,min,max\n";
            out << stats.count << ',' << fixed4(stats.mean) << ',' << fixed4(stats.median)
                << ',' << fixed4(stats.std_dev) << ',' << fixed4(stats.skewness) << ','
                << fixed4(stats.q1) << ',' << fixed4(stats.q3) << ',' << stats.min << ','
                << stats.max << '\n';
            return out.str();
        }
    }
    return {};
}

std::vector<EvalRecord> load_predictions(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open predictions: " + path.string());
    std::vector<EvalRecord> records;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
            EvalRecord record;
            record.cve_id = j.at("cve_id").get<std::string>();
            record.predicted = j.at("predicted").get<std::vector<std::string>>();
            const auto truth = j.at("truth").get<std::vector<std::string>>();
            record.truth.insert(truth.begin(), truth.end());
            record.ranked = true;  // NDJSON arrays carry rank order
            records.push_back(std::move(record));
        } catch (const std::exception& e) {
            throw ParseError("predictions line " + std::to_string(line_number) + ": " +
                             e.what());
        }
    }
    return records;
}

}  // namespace patchscout
