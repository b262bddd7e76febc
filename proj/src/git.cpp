#include "patchscout/git.hpp"

#include <array>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "patchscout/errors.hpp"

namespace patchscout {

CommandResult run_command(const std::vector<std::string>& argv,
                          const std::filesystem::path& cwd) {
    int pipefd[2];
    if (pipe(pipefd) != 0) throw IoError("pipe() failed");

    const pid_t pid = fork();
    if (pid < 0) throw IoError("fork() failed");
    if (pid == 0) {
        close(pipefd[0]);
        dup2(pipefd[1], STDOUT_FILENO);
        dup2(pipefd[1], STDERR_FILENO);
        close(pipefd[1]);
        if (!cwd.empty() && chdir(cwd.c_str()) != 0) _exit(127);
        std::vector<char*> cargs;
        cargs.reserve(argv.size() + 1);
        for (const auto& a : argv) cargs.push_back(const_cast<char*>(a.c_str()));
        cargs.push_back(nullptr);
        execvp(cargs[0], cargs.data());
        _exit(127);
    }
    close(pipefd[1]);
    std::string output;
    std::array<char, 4096> buf{};
    ssize_t n;
    while ((n = read(pipefd[0], buf.data(), buf.size())) > 0)
        output.append(buf.data(), static_cast<std::size_t>(n));
    close(pipefd[0]);
    int status = 0;
    waitpid(pid, &status, 0);
    const int exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return {exit_code, std::move(output)};
}

GitRepo::GitRepo(std::filesystem::path dir) : dir_(std::move(dir)) {}

bool GitRepo::is_repo() const {
    if (!std::filesystem::exists(dir_)) return false;
    auto res = run_command({"git", "rev-parse", "--git-dir"}, dir_);
    return res.exit_code == 0;
}

std::string GitRepo::run(const std::vector<std::string>& args) const {
    std::vector<std::string> argv = {"git"};
    argv.insert(argv.end(), args.begin(), args.end());
    auto res = run_command(argv, dir_);
    if (res.exit_code != 0) {
        std::ostringstream msg;
        msg << "git";
        for (const auto& a : args) msg << ' ' << a;
        msg << " failed in " << dir_.string() << ": " << res.output;
        throw RepoError(msg.str());
    }
    return res.output;
}

std::optional<std::string> GitRepo::try_run(const std::vector<std::string>& args) const {
    std::vector<std::string> argv = {"git"};
    argv.insert(argv.end(), args.begin(), args.end());
    auto res = run_command(argv, dir_);
    if (res.exit_code != 0) return std::nullopt;
    return res.output;
}

namespace {

std::string repo_cache_name(const std::string& url) {
    // owner/name or a full URL -> owner__name
    std::string tail = url;
    if (auto pos = tail.find("://"); pos != std::string::npos) tail = tail.substr(pos + 3);
    while (!tail.empty() && tail.back() == '/') tail.pop_back();
    if (tail.size() > 4 && tail.substr(tail.size() - 4) == ".git")
        tail = tail.substr(0, tail.size() - 4);
    std::vector<std::string> parts;
    std::string cur;
    for (char c : tail) {
        if (c == '/') {
            if (!cur.empty()) parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) parts.push_back(cur);
    if (parts.size() >= 2)
        return parts[parts.size() - 2] + "__" + parts[parts.size() - 1];
    return parts.empty() ? "repo" : parts[0];
}

// Serializes clone/fetch of one repo directory across processes.
class DirLock {
public:
    explicit DirLock(const std::filesystem::path& target)
        : lock_path_(target.string() + ".lock") {
        for (int attempt = 0; attempt < 600; ++attempt) {
            FILE* f = std::fopen(lock_path_.c_str(), "wx");
            if (f) {
                std::fclose(f);
                held_ = true;
                return;
            }
            usleep(100'000);
        }
        throw IoError("timed out acquiring lock " + lock_path_);
    }
    ~DirLock() {
        if (held_) std::remove(lock_path_.c_str());
    }

private:
    std::string lock_path_;
    bool held_ = false;
};

}  // namespace

GitRepo GitRepo::clone_or_open(const std::string& path_or_url,
                               const std::filesystem::path& cache_dir,
                               bool refresh) {
    // Local path: open in place.
    if (std::filesystem::exists(path_or_url)) {
        GitRepo repo{std::filesystem::path(path_or_url)};
        if (!repo.is_repo())
            throw RepoError("not a git repository: " + path_or_url);
        return repo;
    }
    const auto repos_dir = cache_dir / "repos";
    std::filesystem::create_directories(repos_dir);
    const auto target = repos_dir / repo_cache_name(path_or_url);

    DirLock lock(target);
    if (std::filesystem::exists(target)) {
        GitRepo repo{target};
        if (refresh) repo.run({"fetch", "--tags", "--force", "origin"});
        return repo;
    }
    std::string url = path_or_url;
    if (url.find("://") == std::string::npos && url.find('/') != std::string::npos)
        url = "https://github.com/" + url + ".git";
    auto res = run_command({"git", "clone", "--quiet", url, target.string()}, repos_dir);
    if (res.exit_code != 0)
        throw RepoError("clone failed for " + url + ": " + res.output);
    return GitRepo{target};
}

}  // namespace patchscout
