#pragma once

#include <set>
#include <string>
#include <vector>

#include "patchscout/git.hpp"
#include "patchscout/repo_miner.hpp"

namespace patchscout {

enum class Language { c, cpp, java, go, python, javascript, unknown };

std::string to_string(Language lang);

enum class ContextOrigin { parsed, window_fallback };

struct FunctionContext {
    std::string file;
    Language language = Language::unknown;
    std::string declaration;  // signature text; empty for window fallback
    std::string body;         // full function text (declaration included)
    int start_line = 0;       // 1-based inclusive
    int end_line = 0;
    ContextOrigin origin = ContextOrigin::parsed;
    int covered_lines = 0;  // how many requested lines this context covers
};

Language detect_language(const std::string& path);

// .h resolves to C when the same commit touches a .c file with the same stem.
Language detect_language(const std::string& path,
                         const std::vector<std::string>& sibling_files);

// Function definition spans for a whole file, innermost-first resolvable.
struct FunctionSpan {
    int start_line;  // declaration start
    int end_line;    // closing brace / last body line
    std::string declaration;
};

std::vector<FunctionSpan> parse_function_spans(const std::string& source, Language lang);

// For each modified line: the innermost enclosing function, or a +/-10 line
// window when the line sits outside any function. Throws ParseError when
// the source cannot be parsed at all.
std::vector<FunctionContext> enclosing_functions(const std::string& source,
                                                 Language lang,
                                                 const std::set<int>& lines);

struct CommitContexts {
    std::vector<FunctionContext> contexts;
    std::vector<std::string> notices;  // skipped binary / oversized files
};

struct ContextOptions {
    std::size_t max_contexts = 20;
    std::size_t max_file_bytes = 1 << 20;
};

CommitContexts commit_contexts(const CommitRecord& commit, const GitRepo& repo,
                               const ContextOptions& options = {});

}  // namespace patchscout
