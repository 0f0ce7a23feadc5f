#pragma once

// Consumers of finished runs: DOT rendering, run-to-run comparison and merging of
// per-rank documents.

#include "yprov/prov_document.hpp"

#include "json.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace yprov {

struct DotGraph
{
    std::string text;
};

/// Throws InvalidDocument when `doc` has violations.
DotGraph to_dot(const ProvDocument& doc);

enum class DiffStatus { Added, Removed, Changed, DigestMismatch };

std::string_view to_string(DiffStatus status) noexcept;

struct ParamDiff
{
    std::string name;
    std::string context;  // empty for run-level parameters
    DiffStatus status = DiffStatus::Changed;
    std::optional<AttributeValue> left;
    std::optional<AttributeValue> right;

    friend bool operator==(const ParamDiff&, const ParamDiff&) = default;
};

struct MetricDiff
{
    std::string name;
    std::string context;
    std::optional<double> left;   // last sample by step; nullopt when absent or empty
    std::optional<double> right;
    std::optional<double> delta;  // right - left when both exist

    friend bool operator==(const MetricDiff& a, const MetricDiff& b);
};

struct ArtifactDiff
{
    std::string name;
    DiffStatus status = DiffStatus::Added;
    std::optional<std::string> left_digest;
    std::optional<std::string> right_digest;

    friend bool operator==(const ArtifactDiff&, const ArtifactDiff&) = default;
};

struct RunDiff
{
    std::vector<ParamDiff> params;
    std::vector<MetricDiff> metrics;
    std::vector<ArtifactDiff> artifacts;

    [[nodiscard]] bool empty() const noexcept { return params.empty() && metrics.empty() && artifacts.empty(); }
    friend bool operator==(const RunDiff&, const RunDiff&) = default;
};

/// Throws LayoutError (missing files, invalid document), CorruptFile.
RunDiff diff(const std::filesystem::path& left_run_dir, const std::filesystem::path& right_run_dir);

nlohmann::json to_json(const RunDiff& diff);
std::string render_table(const RunDiff& diff);

/// Union of per-rank documents. Records shared by id must be identical; relation ids are
/// suffixed with `@<label>` so every rank keeps its own edges. Labels default to the
/// rank index. A single document is returned unchanged.
/// Throws ConflictError, MixedExperiments, InvalidArgument (label count or duplicates).
ProvDocument merge(std::span<const ProvDocument> docs, std::span<const std::string> rank_labels = {});

}  // namespace yprov
