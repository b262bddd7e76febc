#include "patchscout/prompt.hpp"

#include <algorithm>
#include <ctime>
#include <fstream>
#include <sstream>

#include "patchscout/errors.hpp"

namespace patchscout {

int estimate_tokens(const std::string& text) {
    return static_cast<int>((text.size() + 3) / 4);
}

std::string substitute_placeholder(std::string text, const std::string& key,
                                   const std::string& value) {
    const std::string token = "{" + key + "}";
    std::size_t pos = 0;
    while ((pos = text.find(token, pos)) != std::string::npos) {
        text.replace(pos, token.size(), value);
        pos += value.size();
    }
    return text;
}

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read template: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string iso_date(std::int64_t epoch_seconds) {
    std::time_t t = static_cast<std::time_t>(epoch_seconds);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%d", &tm);
    return buf;
}

constexpr const char* kQuestion =
    "You are given a vulnerability and a numbered list of candidate code commits.\n"
    "Exactly one commit in the list may be the patch that fixes the vulnerability.\n"
    "Think step by step: compare each commit's message and modified functions\n"
    "against the vulnerability description, then choose the single most likely\n"
    "patch commit. Output only the chosen commit id inside an <answer> tag.\n";

constexpr const char* kGuidance =
    "Worked example of the expected answer format:\n"
    "\n"
    "Vulnerability: CVE-1999-0001 - buffer overflow in parse_input allows remote\n"
    "attackers to crash the service.\n"
    "Commits:\n"
    "Commit [c0ffee1]\n"
    "Message: fix buffer overflow in parse_input\n"
    "Commit [badc0de]\n"
    "Message: update documentation\n"
    "\n"
    "Reasoning: the description names parse_input; commit c0ffee1 bounds the copy\n"
    "in that function, while badc0de only touches documentation. The patch is\n"
    "c0ffee1.\n"
    "<answer>c0ffee1</answer>\n";

constexpr const char* kVersionExtract =
    "Your task is to find the affected repositories and the fixed version\n"
    "numbers from the description of a CVE vulnerability. There may be several\n"
    "repositories and version numbers; list every (repository, version number)\n"
    "pair you can identify.\n"
    "\n"
    "Read the following CVE description carefully:\n"
    "\n"
    "<cve_description>\n"
    "{CVE_DESCRIPTION}\n"
    "</cve_description>\n"
    "\n"
    "Proceed as follows:\n"
    "1. Read the whole description and note any software or repository names.\n"
    "2. Extract every affected repository with its fixed version number.\n"
    "3. Make sure no repository or version number mentioned is missed.\n"
    "4. Compile the pairs into a list, one (repository, version number) per line.\n"
    "\n"
    "Output your result inside an <answer> tag:\n"
    "<answer>\n"
    "[(repository, version number) pairs]\n"
    "</answer>\n";

std::string render_commit_section(const CommitRecord& commit,
                                  const std::vector<FunctionContext>& contexts,
                                  std::size_t max_contexts, bool full_bodies) {
    std::ostringstream out;
    out << "Commit [" << commit.abbrev << "]\n";
    out << "Date: " << iso_date(commit.commit_date) << "\n";
    out << "Message: " << commit.message << "\n";
    if (!commit.files.empty()) {
        out << "Files:";
        for (const auto& f : commit.files) out << ' ' << f;
        out << "\n";
    }
    const std::size_t n = std::min(max_contexts, contexts.size());
    for (std::size_t i = 0; i < n; ++i) {
        const auto& ctx = contexts[i];
        out << "Function (" << ctx.file << ":" << ctx.start_line << "-" << ctx.end_line
            << "):\n";
        if (full_bodies || ctx.declaration.empty())
            out << ctx.body << "\n";
        else
            out << ctx.declaration << "\n";
    }
    return out.str();
}

}  // namespace

TemplateSet TemplateSet::load(const std::filesystem::path& dir) {
    TemplateSet t;
    t.question = read_file(dir / "question.txt");
    t.guidance = read_file(dir / "guidance.txt");
    t.version_extract = read_file(dir / "version_extract.txt");
    return t;
}

TemplateSet TemplateSet::builtin() {
    return TemplateSet{kQuestion, kGuidance, kVersionExtract};
}

std::string PromptBundle::render() const {
    std::ostringstream out;
    out << question << "\n";
    out << vuln_section << "\n";
    out << "Candidate commits:\n";
    for (const auto& section : commit_sections) out << section.rendered;
    out << "\n" << guidance;
    return out.str();
}

PromptBundle build_prompt(const VulnRecord& record,
                          const std::vector<CommitRecord>& batch,
                          const std::map<std::string, std::vector<FunctionContext>>& contexts,
                          const TemplateSet& templates,
                          const PromptOptions& options) {
    if (batch.empty()) throw ContractError("build_prompt requires a non-empty batch");

    PromptBundle bundle;
    bundle.cve_id = record.cve_id;
    bundle.question = substitute_placeholder(templates.question, "CVE_ID", record.cve_id);
    bundle.vuln_section =
        "Vulnerability: " + record.cve_id + "\nDescription: " + record.description + "\n";
    bundle.guidance = templates.guidance;

    std::size_t max_contexts = 0;
    for (const auto& commit : batch) {
        auto it = contexts.find(commit.hash);
        if (it != contexts.end()) max_contexts = std::max(max_contexts, it->second.size());
    }

    auto assemble = [&](std::size_t ctx_cap, bool full_bodies) {
        bundle.commit_sections.clear();
        for (const auto& commit : batch) {
            static const std::vector<FunctionContext> empty;
            auto it = contexts.find(commit.hash);
            const auto& ctx_list = it == contexts.end() ? empty : it->second;
            bundle.commit_sections.push_back(
                {commit.abbrev,
                 render_commit_section(commit, ctx_list, ctx_cap, full_bodies)});
        }
        bundle.token_estimate = estimate_tokens(bundle.render());
    };

    // Context-first truncation: shed lowest-ranked contexts, then reduce
    // bodies to declarations, then message-only. Commits are never dropped.
    assemble(max_contexts, true);
    std::size_t cap = max_contexts;
    while (bundle.token_estimate > options.token_budget && cap > 1) assemble(--cap, true);
    if (bundle.token_estimate > options.token_budget) assemble(cap, false);
    if (bundle.token_estimate > options.token_budget) assemble(0, false);
    if (bundle.token_estimate > options.token_budget)
        throw BudgetError("token budget " + std::to_string(options.token_budget) +
                              " below minimal feasible " +
                              std::to_string(bundle.token_estimate),
                          bundle.token_estimate);
    return bundle;
}

std::string render_version_extract_prompt(const VulnRecord& record,
                                          const TemplateSet& templates) {
    std::string text =
        substitute_placeholder(templates.version_extract, "CVE_DESCRIPTION",
                               record.description);
    return substitute_placeholder(std::move(text), "CVE_ID", record.cve_id);
}

}  // namespace patchscout
