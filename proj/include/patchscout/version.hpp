#pragma once

#include <string>
#include <vector>

namespace patchscout {

// Canonical version key: numeric components plus an optional pre-release
// suffix ("1.2.10-rc1" -> {1,2,10}, "rc1"). Normalization strips common
// release prefixes (v, V, release-, rel/, ...) and is idempotent.
struct VersionKey {
    std::vector<long long> components;
    std::string suffix;

    bool operator==(const VersionKey&) const = default;
};

std::string normalize_version(const std::string& raw);
VersionKey parse_version_key(const std::string& normalized);

// Total order: component-wise numeric, shorter run of equal components
// sorts first, release sorts after its own pre-releases.
int compare_version_keys(const VersionKey& a, const VersionKey& b);
int compare_versions(const std::string& raw_a, const std::string& raw_b);

bool version_has_digit(const std::string& s);

// Same major.minor release line (first two numeric components equal).
bool same_release_line(const VersionKey& a, const VersionKey& b);

std::size_t edit_distance(const std::string& a, const std::string& b);

}  // namespace patchscout
