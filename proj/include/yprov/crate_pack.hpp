#pragma once

// RO-Crate 1.1 manifest for a run directory: metadata descriptor, root dataset and one
// File entity (size + SHA-256) per file under the run directory.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace yprov {

inline constexpr std::string_view kCrateManifestFile = "ro-crate-metadata.json";
inline constexpr std::string_view kCrateContext = "https://w3id.org/ro/crate/1.1/context";
inline constexpr std::string_view kCrateProfile = "https://w3id.org/ro/crate/1.1";

enum class CrateIssue { MissingFile, UnlistedFile, DigestMismatch };

std::string_view to_string(CrateIssue issue) noexcept;

struct CrateViolation
{
    CrateIssue issue;
    std::string path;  // relative to the run directory, '/'-separated
    std::string detail;

    friend bool operator==(const CrateViolation&, const CrateViolation&) = default;
};

/// Writes ro-crate-metadata.json and returns its path. Throws LayoutError, IoError.
std::filesystem::path pack(const std::filesystem::path& run_dir);

/// Sorted by path. Throws LayoutError (no manifest), MalformedManifest.
std::vector<CrateViolation> verify(const std::filesystem::path& run_dir);

}  // namespace yprov
