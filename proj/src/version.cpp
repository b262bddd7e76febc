#include "patchscout/version.hpp"

#include <algorithm>
#include <cctype>

namespace patchscout {

namespace {

bool strip_prefix_ci(std::string& s, const std::string& prefix) {
    if (s.size() <= prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(s[i])) != prefix[i]) return false;
    }
    s.erase(0, prefix.size());
    return true;
}

}  // namespace

std::string normalize_version(const std::string& raw) {
    std::string s = raw;
    // Trim whitespace.
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();

    bool changed = true;
    while (changed) {
        changed = strip_prefix_ci(s, "release-") || strip_prefix_ci(s, "release/") ||
                  strip_prefix_ci(s, "releases/") || strip_prefix_ci(s, "rel-") ||
                  strip_prefix_ci(s, "rel/") || strip_prefix_ci(s, "version-") ||
                  strip_prefix_ci(s, "version/");
        // A lone leading 'v'/'V' directly before a digit.
        if (s.size() > 1 && (s[0] == 'v' || s[0] == 'V') &&
            std::isdigit(static_cast<unsigned char>(s[1]))) {
            s.erase(0, 1);
            changed = true;
        }
    }
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

VersionKey parse_version_key(const std::string& normalized) {
    VersionKey key;
    std::size_t i = 0;
    const std::size_t n = normalized.size();
    while (i < n) {
        if (std::isdigit(static_cast<unsigned char>(normalized[i]))) {
            long long value = 0;
            while (i < n && std::isdigit(static_cast<unsigned char>(normalized[i]))) {
                value = value * 10 + (normalized[i] - '0');
                ++i;
            }
            key.components.push_back(value);
            if (i < n && (normalized[i] == '.' || normalized[i] == '_' || normalized[i] == '-')) {
                if (i + 1 < n && std::isdigit(static_cast<unsigned char>(normalized[i + 1]))) {
                    ++i;
                    continue;
                }
            }
            break;
        }
        ++i;
    }
    // Whatever trails the numeric run is the pre-release suffix.
    key.suffix = normalized.substr(std::min(i, n));
    while (!key.suffix.empty() && (key.suffix.front() == '-' || key.suffix.front() == '.' ||
                                   key.suffix.front() == '_')) {
        key.suffix.erase(key.suffix.begin());
    }
    return key;
}

int compare_version_keys(const VersionKey& a, const VersionKey& b) {
    const std::size_t n = std::max(a.components.size(), b.components.size());
    for (std::size_t i = 0; i < n; ++i) {
        const long long av = i < a.components.size() ? a.components[i] : 0;
        const long long bv = i < b.components.size() ? b.components[i] : 0;
        if (av != bv) return av < bv ? -1 : 1;
    }
    // Equal numerics: a release sorts after its pre-releases.
    if (a.suffix.empty() != b.suffix.empty()) return a.suffix.empty() ? 1 : -1;
    if (a.suffix != b.suffix) return a.suffix < b.suffix ? -1 : 1;
    return 0;
}

int compare_versions(const std::string& raw_a, const std::string& raw_b) {
    return compare_version_keys(parse_version_key(normalize_version(raw_a)),
                                parse_version_key(normalize_version(raw_b)));
}

bool version_has_digit(const std::string& s) {
    return std::any_of(s.begin(), s.end(),
                       [](unsigned char c) { return std::isdigit(c) != 0; });
}

bool same_release_line(const VersionKey& a, const VersionKey& b) {
    if (a.components.size() < 2 || b.components.size() < 2) return false;
    return a.components[0] == b.components[0] && a.components[1] == b.components[1];
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t prev = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t cur = row[j];
            const std::size_t cost = a[i - 1] == b[j - 1] ? 0 : 1;
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, prev + cost});
            prev = cur;
        }
    }
    return row[b.size()];
}

}  // namespace patchscout
