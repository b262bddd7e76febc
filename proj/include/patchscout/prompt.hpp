#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "patchscout/code_context.hpp"
#include "patchscout/repo_miner.hpp"
#include "patchscout/vuln.hpp"

namespace patchscout {

// ceil(bytes / 4); documented as approximate.
int estimate_tokens(const std::string& text);

struct TemplateSet {
    std::string question;
    std::string guidance;         // few-shot example with the answer scaffold
    std::string version_extract;  // repository/version extraction prompt

    // Loads question.txt, guidance.txt, version_extract.txt from a directory.
    static TemplateSet load(const std::filesystem::path& dir);
    static TemplateSet builtin();
};

struct CommitSection {
    std::string abbrev;
    std::string rendered;
};

struct PromptBundle {
    std::string cve_id;
    std::string question;
    std::string vuln_section;
    std::vector<CommitSection> commit_sections;  // input batch order
    std::string guidance;
    int token_estimate = 0;

    std::string render() const;
};

struct PromptOptions {
    int token_budget = 8000;
};

// The four-section chain-of-thought prompt for one batch. Contexts are
// truncated (lowest-ranked dropped, then bodies reduced to declarations)
// until the estimate fits; commits are never dropped.
PromptBundle build_prompt(const VulnRecord& record,
                          const std::vector<CommitRecord>& batch,
                          const std::map<std::string, std::vector<FunctionContext>>& contexts,
                          const TemplateSet& templates,
                          const PromptOptions& options = {});

// Renders the version-extraction prompt for llm_extract_version_hints.
std::string render_version_extract_prompt(const VulnRecord& record,
                                          const TemplateSet& templates);

std::string substitute_placeholder(std::string text, const std::string& key,
                                   const std::string& value);

}  // namespace patchscout
