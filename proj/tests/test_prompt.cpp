#include <doctest.h>

#include "patchscout/errors.hpp"
#include "patchscout/prompt.hpp"

using namespace patchscout;

namespace {

VulnRecord make_record() {
    VulnRecord r;
    r.cve_id = "CVE-2020-5236";
    r.description = "CSRF token validation can be bypassed.";
    return r;
}

CommitRecord make_commit(const std::string& seed, const std::string& message) {
    CommitRecord c;
    c.hash = seed + std::string(40 - seed.size(), '0');
    c.abbrev = c.hash.substr(0, 7);
    c.message = message;
    c.commit_date = 1600000000;
    c.files = {"src/auth.py"};
    return c;
}

FunctionContext make_context(int lines_of_body) {
    FunctionContext ctx;
    ctx.file = "src/auth.py";
    ctx.language = Language::python;
    ctx.declaration = "def check_token(token):";
    ctx.body = ctx.declaration + "\n";
    for (int i = 0; i < lines_of_body; ++i)
        ctx.body += "    value = value + " + std::to_string(i) + "  # padpadpad\n";
    ctx.start_line = 1;
    ctx.end_line = lines_of_body + 1;
    ctx.covered_lines = 1;
    return ctx;
}

}  // namespace

TEST_CASE("token estimate is ceil(bytes/4)") {
    CHECK(estimate_tokens("") == 0);
    CHECK(estimate_tokens("12345678") == 2);
    CHECK(estimate_tokens(std::string(1000, 'x')) == 250);
    CHECK(estimate_tokens("abcde") == 2);
}

TEST_CASE("single commit with ample budget keeps full contexts") {
    const auto record = make_record();
    const auto commit = make_commit("a1", "fix csrf");
    std::map<std::string, std::vector<FunctionContext>> contexts{
        {commit.hash, {make_context(5)}}};
    const auto bundle =
        build_prompt(record, {commit}, contexts, TemplateSet::builtin());
    REQUIRE(bundle.commit_sections.size() == 1);
    const std::string text = bundle.render();
    CHECK(text.find(commit.abbrev) != std::string::npos);
    CHECK(text.find("value = value + 4") != std::string::npos);  // body survived
    CHECK(text.find(record.description) != std::string::npos);
}

TEST_CASE("tight budget keeps every commit, reduces bodies to declarations") {
    const auto record = make_record();
    std::vector<CommitRecord> batch;
    std::map<std::string, std::vector<FunctionContext>> contexts;
    for (int i = 0; i < 10; ++i) {
        auto commit = make_commit("b" + std::to_string(i), "change " + std::to_string(i));
        contexts[commit.hash] = {make_context(50), make_context(40)};
        batch.push_back(std::move(commit));
    }
    PromptOptions options;
    options.token_budget = 1200;
    const auto bundle =
        build_prompt(record, batch, contexts, TemplateSet::builtin(), options);
    CHECK(bundle.token_estimate <= options.token_budget);
    const std::string text = bundle.render();
    for (const auto& commit : batch)
        CHECK(text.find("[" + commit.abbrev + "]") != std::string::npos);
    CHECK(text.find("value = value + 30") == std::string::npos);  // bodies dropped
}

TEST_CASE("empty batch violates the contract") {
    CHECK_THROWS_AS(
        build_prompt(make_record(), {}, {}, TemplateSet::builtin()),
        ContractError);
}

TEST_CASE("budget below message-only minimum reports the feasible floor") {
    const auto record = make_record();
    const auto commit = make_commit("c1", "fix");
    PromptOptions options;
    options.token_budget = 10;
    try {
        build_prompt(record, {commit}, {}, TemplateSet::builtin(), options);
        FAIL("expected BudgetError");
    } catch (const BudgetError& e) {
        CHECK(e.minimal_budget > options.token_budget);
        // Feasible floor is achievable.
        PromptOptions retry;
        retry.token_budget = e.minimal_budget;
        const auto bundle =
            build_prompt(record, {commit}, {}, TemplateSet::builtin(), retry);
        CHECK(bundle.token_estimate <= retry.token_budget);
    }
}

TEST_CASE("rendering is deterministic and abbrevs appear once in headers") {
    const auto record = make_record();
    const auto commit = make_commit("d1", "fix");
    std::map<std::string, std::vector<FunctionContext>> contexts{
        {commit.hash, {make_context(3)}}};
    const auto a = build_prompt(record, {commit}, contexts, TemplateSet::builtin());
    const auto b = build_prompt(record, {commit}, contexts, TemplateSet::builtin());
    CHECK(a.render() == b.render());

    const std::string header = "Commit [" + commit.abbrev + "]";
    const std::string text = a.render();
    std::size_t count = 0;
    for (std::size_t pos = text.find(header); pos != std::string::npos;
         pos = text.find(header, pos + 1))
        ++count;
    CHECK(count == 1);
}

TEST_CASE("token estimate grows with text length") {
    std::string text;
    int last = estimate_tokens(text);
    for (int i = 0; i < 100; ++i) {
        text += "abc";
        const int now = estimate_tokens(text);
        CHECK(now >= last);
        last = now;
    }
}

TEST_CASE("placeholder substitution") {
    CHECK(substitute_placeholder("hello {NAME}!", "NAME", "world") == "hello world!");
    CHECK(substitute_placeholder("{A}{A}", "A", "x") == "xx");
    CHECK(substitute_placeholder("none", "A", "x") == "none");
}

TEST_CASE("version extraction prompt embeds the description") {
    const auto record = make_record();
    const std::string prompt =
        render_version_extract_prompt(record, TemplateSet::builtin());
    CHECK(prompt.find(record.description) != std::string::npos);
    CHECK(prompt.find("{CVE_DESCRIPTION}") == std::string::npos);
    CHECK(prompt.find("<answer>") != std::string::npos);
}
