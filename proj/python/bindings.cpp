#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "patchscout/code_context.hpp"
#include "patchscout/eval.hpp"
#include "patchscout/gateway.hpp"
#include "patchscout/prompt.hpp"
#include "patchscout/repo_miner.hpp"
#include "patchscout/version.hpp"
#include "patchscout/vote.hpp"
#include "patchscout/vuln.hpp"

namespace py = pybind11;
using namespace patchscout;

PYBIND11_MODULE(_patchscout, m) {
    m.doc() = "CVE patch commit localization core";

    m.def("normalize_message", &normalize_message, py::arg("message"));
    m.def("normalize_version", &normalize_version, py::arg("raw"));
    m.def("compare_versions", &compare_versions, py::arg("a"), py::arg("b"));
    m.def("estimate_tokens", &estimate_tokens, py::arg("text"));
    m.def("valid_cve_id", &valid_cve_id, py::arg("cve_id"));

    m.def("detect_language",
          [](const std::string& path) { return to_string(detect_language(path)); },
          py::arg("path"));

    py::class_<FunctionContext>(m, "FunctionContext")
        .def_readonly("file", &FunctionContext::file)
        .def_property_readonly("language",
                               [](const FunctionContext& c) { return to_string(c.language); })
        .def_readonly("declaration", &FunctionContext::declaration)
        .def_readonly("body", &FunctionContext::body)
        .def_readonly("start_line", &FunctionContext::start_line)
        .def_readonly("end_line", &FunctionContext::end_line)
        .def_property_readonly("origin", [](const FunctionContext& c) {
            return c.origin == ContextOrigin::parsed ? "parsed" : "window_fallback";
        });

    m.def(
        "enclosing_functions",
        [](const std::string& source, const std::string& language,
           const std::set<int>& lines) {
            Language lang = Language::unknown;
            for (Language candidate : {Language::c, Language::cpp, Language::java,
                                       Language::go, Language::python,
                                       Language::javascript})
                if (to_string(candidate) == language) lang = candidate;
            if (lang == Language::unknown)
                throw py::value_error("unknown language: " + language);
            return enclosing_functions(source, lang, lines);
        },
        py::arg("source"), py::arg("language"), py::arg("lines"));

    m.def(
        "extract_commit_choice",
        [](const std::string& response, const std::set<std::string>& valid) -> py::object {
            const CommitChoice choice = extract_commit_choice(response, valid);
            if (const auto* hash = std::get_if<std::string>(&choice))
                return py::str(*hash);
            const auto reason = std::get<Abstain>(choice).reason;
            const char* name = reason == AbstainReason::none_found ? "none_found"
                               : reason == AbstainReason::ambiguous_prefix
                                   ? "ambiguous_prefix"
                                   : "invalid_candidate";
            return py::make_tuple(py::none(), name);
        },
        py::arg("response"), py::arg("valid"));

    py::class_<VoteTally>(m, "VoteTally")
        .def_readonly("cve_id", &VoteTally::cve_id)
        .def_readonly("rounds_completed", &VoteTally::rounds_completed)
        .def_readonly("votes", &VoteTally::votes)
        .def_readonly("abstentions", &VoteTally::abstentions)
        .def_readonly("winners", &VoteTally::winners);

    m.def("tally", &tally, py::arg("survivors"));

    py::class_<PerCveScore>(m, "PerCveScore")
        .def_readonly("cve_id", &PerCveScore::cve_id)
        .def_readonly("precision", &PerCveScore::precision)
        .def_readonly("recall", &PerCveScore::recall)
        .def_readonly("f1", &PerCveScore::f1)
        .def_readonly("hit", &PerCveScore::hit);

    py::class_<EvalReport>(m, "EvalReport")
        .def_readonly("per_cve", &EvalReport::per_cve)
        .def_readonly("macro_precision", &EvalReport::macro_precision)
        .def_readonly("macro_recall", &EvalReport::macro_recall)
        .def_readonly("macro_f1", &EvalReport::macro_f1)
        .def_readonly("accuracy_count", &EvalReport::accuracy_count)
        .def_readonly("accuracy_pct", &EvalReport::accuracy_pct);

    m.def(
        "score",
        [](const std::vector<std::tuple<std::string, std::vector<std::string>,
                                        std::vector<std::string>>>& rows,
           std::optional<int> k) {
            std::vector<EvalRecord> records;
            for (const auto& [cve_id, predicted, truth] : rows) {
                EvalRecord record;
                record.cve_id = cve_id;
                record.predicted = predicted;
                record.truth.insert(truth.begin(), truth.end());
                record.ranked = true;
                records.push_back(std::move(record));
            }
            return score(records, k);
        },
        py::arg("records"), py::arg("k") = py::none());

    py::class_<CandidateStats>(m, "CandidateStats")
        .def_readonly("count", &CandidateStats::count)
        .def_readonly("mean", &CandidateStats::mean)
        .def_readonly("median", &CandidateStats::median)
        .def_readonly("std_dev", &CandidateStats::std_dev)
        .def_readonly("skewness", &CandidateStats::skewness)
        .def_readonly("q1", &CandidateStats::q1)
        .def_readonly("q3", &CandidateStats::q3)
        .def_readonly("min", &CandidateStats::min)
        .def_readonly("max", &CandidateStats::max);

    m.def("candidate_stats", &candidate_stats, py::arg("counts"));

    m.def("parse_unified_diff", [](const std::string& text) {
        py::list out;
        for (const auto& hunk : parse_unified_diff(text)) {
            py::dict d;
            d["file"] = hunk.file;
            d["old_start"] = hunk.old_start;
            d["old_len"] = hunk.old_len;
            d["new_start"] = hunk.new_start;
            d["new_len"] = hunk.new_len;
            d["added_lines"] = hunk.added_lines;
            d["removed_lines"] = hunk.removed_lines;
            out.append(d);
        }
        return out;
    }, py::arg("diff_text"));
}
