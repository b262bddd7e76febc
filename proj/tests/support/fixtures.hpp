#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "patchscout/errors.hpp"
#include "patchscout/git.hpp"

namespace patchscout::testing {

namespace fs = std::filesystem;

// Unique scratch directory, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::mt19937_64 rng{std::random_device{}()};
        path_ = fs::temp_directory_path() /
                ("patchscout-test-" + std::to_string(rng()));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

// Git repository builder with deterministic dates and identities.
class FixtureRepo {
public:
    explicit FixtureRepo(const fs::path& dir) : repo_(dir) {
        fs::create_directories(dir);
        run({"init", "--quiet", "--initial-branch=main"});
        run({"config", "user.email", "fixture@example.com"});
        run({"config", "user.name", "Fixture"});
        run({"config", "commit.gpgsign", "false"});
        run({"config", "tag.gpgsign", "false"});
    }

    const GitRepo& repo() const { return repo_; }

    void write(const std::string& rel, const std::string& content) {
        const fs::path full = repo_.dir() / rel;
        fs::create_directories(full.parent_path());
        std::ofstream out(full, std::ios::binary);
        out << content;
    }

    // Returns the full commit hash. Dates advance 100 s per commit unless given.
    std::string commit(const std::string& message, long long date = -1) {
        if (date < 0) date = next_date_;
        next_date_ = date + 100;
        const std::string stamp = std::to_string(date) + " +0000";
        run({"add", "-A"});
        auto res = run_command(
            {"git", "-c", "user.email=fixture@example.com", "-c", "user.name=Fixture",
             "commit", "--quiet", "--allow-empty", "-m", message,
             "--date", stamp},
            repo_.dir(), stamp);
        return head();
    }

    std::string head() {
        std::string h = repo_.run({"rev-parse", "HEAD"});
        while (!h.empty() && (h.back() == '\n' || h.back() == '\r')) h.pop_back();
        return h;
    }

    void tag(const std::string& name) { run({"tag", name}); }
    void branch(const std::string& name, const std::string& start) {
        run({"checkout", "--quiet", "-b", name, start});
    }
    void checkout(const std::string& ref) { run({"checkout", "--quiet", ref}); }
    void run(const std::vector<std::string>& args) { repo_.run(args); }

private:
    static CommandResult run_command(std::vector<std::string> argv, const fs::path& cwd,
                                     const std::string& committer_date) {
        // GIT_COMMITTER_DATE must come via the environment.
        std::vector<std::string> wrapped = {"env", "GIT_COMMITTER_DATE=" + committer_date};
        wrapped.insert(wrapped.end(), argv.begin(), argv.end());
        auto res = patchscout::run_command(wrapped, cwd);
        if (res.exit_code != 0)
            throw RepoError("fixture git command failed: " + res.output);
        return res;
    }

    GitRepo repo_;
    long long next_date_ = 1600000000;
};

}  // namespace patchscout::testing
