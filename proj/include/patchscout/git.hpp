#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace patchscout {

// Thin wrapper over the git CLI. Handles are read-only after clone/fetch.
class GitRepo {
public:
    explicit GitRepo(std::filesystem::path dir);

    const std::filesystem::path& dir() const { return dir_; }
    bool is_repo() const;

    // Runs git with the given args in the repo directory; throws RepoError
    // on non-zero exit.
    std::string run(const std::vector<std::string>& args) const;

    // As run(), but a non-zero exit yields nullopt instead of throwing.
    std::optional<std::string> try_run(const std::vector<std::string>& args) const;

    static GitRepo clone_or_open(const std::string& path_or_url,
                                 const std::filesystem::path& cache_dir,
                                 bool refresh = false);

private:
    std::filesystem::path dir_;
};

// Runs an arbitrary command, capturing stdout. Used by GitRepo and tests.
struct CommandResult {
    int exit_code;
    std::string output;
};
CommandResult run_command(const std::vector<std::string>& argv,
                          const std::filesystem::path& cwd);

}  // namespace patchscout
