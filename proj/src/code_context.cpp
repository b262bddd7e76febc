#include "patchscout/code_context.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "patchscout/errors.hpp"

namespace patchscout {

std::string to_string(Language lang) {
    switch (lang) {
        case Language::c: return "c";
        case Language::cpp: return "cpp";
        case Language::java: return "java";
        case Language::go: return "go";
        case Language::python: return "python";
        case Language::javascript: return "javascript";
        case Language::unknown: return "unknown";
    }
    return "unknown";
}

namespace {

std::string extension_of(const std::string& path) {
    const auto slash = path.find_last_of('/');
    const auto dot = path.find_last_of('.');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return {};
    return path.substr(dot);
}

std::string stem_of(const std::string& path) {
    const auto slash = path.find_last_of('/');
    std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
    const auto dot = base.find_last_of('.');
    return dot == std::string::npos ? base : base.substr(0, dot);
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            lines.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    lines.push_back(cur);
    return lines;
}

std::string join_lines(const std::vector<std::string>& lines, int start, int end) {
    std::string out;
    for (int i = start; i <= end && i <= static_cast<int>(lines.size()); ++i) {
        out += lines[static_cast<std::size_t>(i - 1)];
        if (i < end) out += '\n';
    }
    return out;
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// Replaces comments and string/char literal contents with spaces, keeping
// newlines so line numbers survive.
std::string mask_source(const std::string& src, Language lang) {
    std::string out = src;
    const std::size_t n = src.size();
    std::size_t i = 0;
    auto blank = [&](std::size_t from, std::size_t to) {
        for (std::size_t k = from; k < to && k < n; ++k)
            if (out[k] != '\n') out[k] = ' ';
    };
    const bool hash_comments = lang == Language::python;
    while (i < n) {
        const char c = src[i];
        if (!hash_comments && c == '/' && i + 1 < n && src[i + 1] == '/') {
            std::size_t j = i;
            while (j < n && src[j] != '\n') ++j;
            blank(i, j);
            i = j;
        } else if (!hash_comments && c == '/' && i + 1 < n && src[i + 1] == '*') {
            std::size_t j = i + 2;
            while (j + 1 < n && !(src[j] == '*' && src[j + 1] == '/')) ++j;
            blank(i, std::min(j + 2, n));
            i = std::min(j + 2, n);
        } else if (hash_comments && c == '#') {
            std::size_t j = i;
            while (j < n && src[j] != '\n') ++j;
            blank(i, j);
            i = j;
        } else if (c == '"' || c == '\'' || (lang == Language::javascript && c == '`')) {
            // Python triple quotes
            if (hash_comments && i + 2 < n && src[i + 1] == c && src[i + 2] == c) {
                std::size_t j = i + 3;
                while (j + 2 < n && !(src[j] == c && src[j + 1] == c && src[j + 2] == c)) ++j;
                blank(i + 3, std::min(j, n));
                i = std::min(j + 3, n);
                continue;
            }
            std::size_t j = i + 1;
            while (j < n && src[j] != c && src[j] != '\n') {
                if (src[j] == '\\') ++j;
                ++j;
            }
            blank(i + 1, j);
            i = std::min(j + 1, n);
        } else {
            ++i;
        }
    }
    return out;
}

bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_' || c == '$' || c == '~';
}

int line_of(const std::string& text, std::size_t pos) {
    int line = 1;
    for (std::size_t i = 0; i < pos && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

bool is_keyword(const std::string& word, Language lang) {
    static const std::set<std::string> common = {"if",     "for",    "while", "switch",
                                                 "catch",  "return", "sizeof", "do",
                                                 "else",   "try",    "new",    "throw",
                                                 "delete", "assert", "synchronized", "typeof",
                                                 "defer",  "select", "case"};
    (void)lang;
    return common.count(word) > 0;
}

struct BraceParser {
    const std::string& src;     // original text
    const std::string& masked;  // literals/comments blanked
    Language lang;

    std::vector<FunctionSpan> parse() {
        std::vector<FunctionSpan> spans;
        const std::size_t n = masked.size();
        std::size_t stmt_start = 0;  // start of the current statement
        std::size_t line_start = 0;
        int depth = 0;

        for (std::size_t i = 0; i < n; ++i) {
            const char c = masked[i];
            if (c == '\n') {
                // Blank lines (including masked comment-only lines) and
                // preprocessor directives end the pending statement.
                std::size_t j = line_start;
                while (j < i && std::isspace(static_cast<unsigned char>(masked[j])))
                    ++j;
                if (j == i || masked[j] == '#') stmt_start = i + 1;
                line_start = i + 1;
                continue;
            }
            if (c == ';' || c == '}' || c == '{') {
                if (c == '{') ++depth;
                if (c == '}') --depth;
                stmt_start = i + 1;
                continue;
            }
            if (c != '(') continue;

            // Candidate parameter list. Identify what precedes it.
            std::size_t k = i;
            while (k > 0 && std::isspace(static_cast<unsigned char>(masked[k - 1]))) --k;
            std::string name;
            std::size_t name_end = k;
            while (k > 0 && ident_char(masked[k - 1])) --k;
            name = masked.substr(k, name_end - k);

            const bool name_ok = !name.empty() && !is_keyword(name, lang) &&
                                 !std::isdigit(static_cast<unsigned char>(name[0]));
            // Arrow functions have no name before '('; decided by lookahead.
            const bool candidate = name_ok || lang == Language::javascript;
            const std::size_t close = match_paren(i);
            if (close == std::string::npos) continue;
            if (!candidate) {
                i = close;  // skip the whole list, keep stmt_start
                continue;
            }

            const std::size_t brace = body_brace_after(close, name_ok);
            if (brace == std::string::npos) {
                i = close;
                continue;
            }
            const std::size_t end_brace = match_brace(brace);
            if (end_brace == std::string::npos) continue;

            std::size_t decl_from = decl_start(stmt_start, k);
            FunctionSpan span;
            span.start_line = line_of(src, decl_from);
            span.end_line = line_of(src, end_brace);
            span.declaration = trim(slice(decl_from, brace));
            // A later '(' inside the same header (member initializers, go
            // receivers) rediscovers the same span; keep the first record.
            const bool duplicate =
                !spans.empty() && spans.back().start_line == span.start_line &&
                spans.back().end_line == span.end_line;
            if (!span.declaration.empty() && !duplicate)
                spans.push_back(std::move(span));
            // Continue scanning inside the body so nested functions are found.
        }
        if (depth_mismatch()) throw ParseError("unbalanced braces");
        return spans;
    }

private:
    std::string slice(std::size_t from, std::size_t to) const {
        return src.substr(from, to > from ? to - from : 0);
    }

    bool depth_mismatch() const {
        long depth = 0;
        for (char c : masked) {
            if (c == '{') ++depth;
            if (c == '}') --depth;
            if (depth < 0) return true;
        }
        return depth != 0;
    }

    std::size_t match_paren(std::size_t open) const {
        int depth = 0;
        for (std::size_t j = open; j < masked.size(); ++j) {
            if (masked[j] == '(') ++depth;
            if (masked[j] == ')' && --depth == 0) return j;
        }
        return std::string::npos;
    }

    std::size_t match_brace(std::size_t open) const {
        int depth = 0;
        for (std::size_t j = open; j < masked.size(); ++j) {
            if (masked[j] == '{') ++depth;
            if (masked[j] == '}' && --depth == 0) return j;
        }
        return std::string::npos;
    }

    // After the parameter list's ')', find the body '{' allowing trailing
    // qualifiers (const/noexcept/override/throws/ctor-initializers/->type);
    // anonymous JS callbacks require an arrow. Bail at ';', '=', or an
    // unbalanced close.
    std::size_t body_brace_after(std::size_t close, bool name_ok) const {
        int paren = 0;
        bool arrow_seen = false;
        for (std::size_t j = close + 1; j < masked.size(); ++j) {
            const char c = masked[j];
            if (c == '(') ++paren;
            else if (c == ')') {
                if (--paren < 0) return std::string::npos;
            } else if (paren > 0) {
                continue;
            } else if (c == '{') {
                if (lang == Language::javascript && !name_ok && !arrow_seen)
                    return std::string::npos;
                return j;
            } else if (c == ';' || c == '}') {
                return std::string::npos;
            } else if (c == '=') {
                if (lang == Language::javascript && j + 1 < masked.size() &&
                    masked[j + 1] == '>') {
                    arrow_seen = true;
                    ++j;
                    continue;
                }
                return std::string::npos;
            }
        }
        return std::string::npos;
    }

    // The declaration begins at the statement start, trimmed of leading
    // whitespace and access-specifier labels.
    std::size_t decl_start(std::size_t stmt_start, std::size_t name_start) const {
        std::size_t from = std::min(stmt_start, name_start);
        while (from < masked.size() &&
               std::isspace(static_cast<unsigned char>(masked[from])))
            ++from;
        for (const char* label : {"public:", "private:", "protected:", "default:"}) {
            const std::string l(label);
            if (masked.compare(from, l.size(), l) == 0) {
                from += l.size();
                while (from < masked.size() &&
                       std::isspace(static_cast<unsigned char>(masked[from])))
                    ++from;
            }
        }
        return std::min(from, name_start);
    }
};

std::vector<FunctionSpan> parse_python_spans(const std::string& source) {
    const auto lines = split_lines(source);
    const std::string masked = mask_source(source, Language::python);
    const auto masked_lines = split_lines(masked);
    std::vector<FunctionSpan> spans;

    auto indent_of = [](const std::string& line) {
        int indent = 0;
        for (char c : line) {
            if (c == ' ') ++indent;
            else if (c == '\t') indent += 8;
            else break;
        }
        return indent;
    };
    auto is_blank = [&](const std::string& line) {
        return trim(line).empty();
    };

    for (std::size_t i = 0; i < masked_lines.size(); ++i) {
        const std::string& ml = masked_lines[i];
        const std::string t = trim(ml);
        const bool is_def = t.rfind("def ", 0) == 0 || t.rfind("async def ", 0) == 0;
        if (!is_def) continue;

        const int def_indent = indent_of(ml);
        // Header may span lines until parens balance and a ':' appears.
        std::size_t header_end = i;
        int paren = 0;
        bool closed = false;
        for (std::size_t j = i; j < masked_lines.size(); ++j) {
            for (char c : masked_lines[j]) {
                if (c == '(' || c == '[') ++paren;
                if (c == ')' || c == ']') --paren;
            }
            if (paren <= 0 && masked_lines[j].find(':') != std::string::npos) {
                header_end = j;
                closed = true;
                break;
            }
        }
        if (!closed) continue;

        std::size_t body_end = header_end;
        for (std::size_t j = header_end + 1; j < masked_lines.size(); ++j) {
            if (is_blank(masked_lines[j])) continue;
            if (indent_of(masked_lines[j]) <= def_indent) break;
            body_end = j;
        }
        FunctionSpan span;
        span.start_line = static_cast<int>(i) + 1;
        span.end_line = static_cast<int>(body_end) + 1;
        span.declaration =
            trim(join_lines(lines, span.start_line, static_cast<int>(header_end) + 1));
        spans.push_back(std::move(span));
    }
    return spans;
}

}  // namespace

Language detect_language(const std::string& path) {
    const std::string ext = extension_of(path);
    if (ext == ".c") return Language::c;
    if (ext == ".cc" || ext == ".cpp" || ext == ".cxx" || ext == ".hpp" || ext == ".h")
        return Language::cpp;
    if (ext == ".java") return Language::java;
    if (ext == ".go") return Language::go;
    if (ext == ".py") return Language::python;
    if (ext == ".js" || ext == ".mjs" || ext == ".jsx") return Language::javascript;
    return Language::unknown;
}

Language detect_language(const std::string& path,
                         const std::vector<std::string>& sibling_files) {
    if (extension_of(path) == ".h") {
        const std::string stem = stem_of(path);
        for (const auto& sibling : sibling_files)
            if (extension_of(sibling) == ".c" && stem_of(sibling) == stem)
                return Language::c;
        return Language::cpp;
    }
    return detect_language(path);
}

std::vector<FunctionSpan> parse_function_spans(const std::string& source, Language lang) {
    if (lang == Language::python) return parse_python_spans(source);
    const std::string masked = mask_source(source, lang);
    BraceParser parser{source, masked, lang};
    return parser.parse();
}

std::vector<FunctionContext> enclosing_functions(const std::string& source,
                                                 Language lang,
                                                 const std::set<int>& lines) {
    const auto spans = parse_function_spans(source, lang);
    const auto src_lines = split_lines(source);
    const int total = static_cast<int>(src_lines.size());

    // key: (start, end, origin) -> context
    std::map<std::tuple<int, int, int>, FunctionContext> by_span;
    for (int line : lines) {
        const FunctionSpan* best = nullptr;
        for (const auto& span : spans) {
            if (line < span.start_line || line > span.end_line) continue;
            if (!best ||
                span.end_line - span.start_line < best->end_line - best->start_line)
                best = &span;
        }
        if (best) {
            auto key = std::make_tuple(best->start_line, best->end_line, 0);
            auto [it, inserted] = by_span.try_emplace(key);
            if (inserted) {
                it->second.language = lang;
                it->second.declaration = best->declaration;
                it->second.body = join_lines(src_lines, best->start_line, best->end_line);
                it->second.start_line = best->start_line;
                it->second.end_line = best->end_line;
                it->second.origin = ContextOrigin::parsed;
            }
            ++it->second.covered_lines;
        } else {
            const int lo = std::max(1, line - 10);
            const int hi = std::min(total, line + 10);
            auto key = std::make_tuple(lo, hi, 1);
            auto [it, inserted] = by_span.try_emplace(key);
            if (inserted) {
                it->second.language = lang;
                it->second.body = join_lines(src_lines, lo, hi);
                it->second.start_line = lo;
                it->second.end_line = hi;
                it->second.origin = ContextOrigin::window_fallback;
            }
            ++it->second.covered_lines;
        }
    }
    std::vector<FunctionContext> out;
    out.reserve(by_span.size());
    for (auto& [key, ctx] : by_span) out.push_back(std::move(ctx));
    return out;
}

CommitContexts commit_contexts(const CommitRecord& commit, const GitRepo& repo,
                               const ContextOptions& options) {
    CommitContexts result;
    for (const auto& file : commit.files) {
        std::set<int> added;
        std::set<int> removed;
        for (const auto& hunk : commit.hunks) {
            if (hunk.file != file) continue;
            for (const auto& [line, text] : hunk.added_lines) added.insert(line);
            for (const auto& [line, text] : hunk.removed_lines) removed.insert(line);
        }
        const bool deletion_only = added.empty() && !removed.empty();
        std::optional<std::string> text =
            deletion_only ? repo.try_run({"show", commit.hash + "^:" + file})
                          : repo.try_run({"show", commit.hash + ":" + file});
        if (!text) {
            result.notices.push_back("unreadable: " + file);
            continue;
        }
        if (text->size() > options.max_file_bytes) {
            result.notices.push_back("oversized, skipped: " + file);
            continue;
        }
        if (text->find('\0') != std::string::npos) {
            result.notices.push_back("binary, skipped: " + file);
            continue;
        }
        const std::set<int>& lines = deletion_only ? removed : added;
        if (lines.empty()) continue;
        const Language lang = detect_language(file, commit.files);

        std::vector<FunctionContext> contexts;
        if (lang == Language::unknown) {
            // No grammar: window fallback around each modified line.
            const auto src_lines = split_lines(*text);
            const int total = static_cast<int>(src_lines.size());
            std::map<std::pair<int, int>, FunctionContext> windows;
            for (int line : lines) {
                const int lo = std::max(1, line - 10);
                const int hi = std::min(total, line + 10);
                auto [it, inserted] = windows.try_emplace({lo, hi});
                if (inserted) {
                    it->second.language = Language::unknown;
                    it->second.body = join_lines(src_lines, lo, hi);
                    it->second.start_line = lo;
                    it->second.end_line = hi;
                    it->second.origin = ContextOrigin::window_fallback;
                }
                ++it->second.covered_lines;
            }
            for (auto& [key, ctx] : windows) contexts.push_back(std::move(ctx));
        } else {
            try {
                contexts = enclosing_functions(*text, lang, lines);
            } catch (const ParseError&) {
                result.notices.push_back("parse failed, window fallback: " + file);
                const auto src_lines = split_lines(*text);
                const int total = static_cast<int>(src_lines.size());
                for (int line : lines) {
                    FunctionContext ctx;
                    ctx.language = lang;
                    ctx.start_line = std::max(1, line - 10);
                    ctx.end_line = std::min(total, line + 10);
                    ctx.body = join_lines(src_lines, ctx.start_line, ctx.end_line);
                    ctx.origin = ContextOrigin::window_fallback;
                    ctx.covered_lines = 1;
                    contexts.push_back(std::move(ctx));
                }
            }
        }
        for (auto& ctx : contexts) {
            ctx.file = file;
            result.contexts.push_back(std::move(ctx));
        }
    }
    std::stable_sort(result.contexts.begin(), result.contexts.end(),
                     [](const FunctionContext& a, const FunctionContext& b) {
                         return a.covered_lines > b.covered_lines;
                     });
    if (result.contexts.size() > options.max_contexts)
        result.contexts.resize(options.max_contexts);
    return result;
}

}  // namespace patchscout
