#pragma once

// Session API for one run of one experiment. Logged parameters, metric series and
// artifacts become PROV entities linked to their owning activity by `used` (inputs) or
// `wasGeneratedBy` (outputs) when the run ends.
//
// Run directory layout:
//   <root>/<experiment>/<run_id>/provenance.json
//   <root>/<experiment>/<run_id>/metrics.ypms
//   <root>/<experiment>/<run_id>/artifacts/...

#include "yprov/collectors.hpp"
#include "yprov/metric_store.hpp"
#include "yprov/prov_document.hpp"

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace yprov {

inline constexpr std::string_view kProvenanceFile = "provenance.json";
inline constexpr std::string_view kStoreFile = "metrics.ypms";
inline constexpr std::string_view kArtifactsDir = "artifacts";
inline constexpr std::string_view kLibraryVersion = "0.1.0";
inline constexpr std::string_view kRootEnvVar = "YPROV_ROOT";

struct ExperimentRef
{
    std::string name;
    std::filesystem::path root_dir;
};

/// Root directory after applying the YPROV_ROOT override.
std::filesystem::path effective_root(const ExperimentRef& experiment);

/// Run stage. Built-ins are TRAINING, VALIDATION and TESTING; any other tag is
/// upper-cased, so "training" is the built-in TRAINING.
class Context
{
public:
    explicit Context(std::string_view tag);

    static Context training() { return Context("TRAINING"); }
    static Context validation() { return Context("VALIDATION"); }
    static Context testing() { return Context("TESTING"); }
    static Context system() { return Context("SYSTEM"); }

    [[nodiscard]] const std::string& tag() const noexcept { return tag_; }
    [[nodiscard]] bool is_builtin() const noexcept;

    friend bool operator==(const Context&, const Context&) = default;
    friend auto operator<=>(const Context&, const Context&) = default;

private:
    std::string tag_;
};

class Clock
{
public:
    virtual ~Clock() = default;
    virtual TimestampMs now_ms() = 0;
};

class SystemClock : public Clock
{
public:
    TimestampMs now_ms() override;
};

/// Fixed time that moves only when told to (optionally by `tick` per reading).
class ManualClock : public Clock
{
public:
    explicit ManualClock(TimestampMs start = 0, TimestampMs tick = 0);

    TimestampMs now_ms() override;
    void set(TimestampMs t);
    void advance(TimestampMs delta);

private:
    std::mutex mutex_;
    TimestampMs now_;
    TimestampMs tick_;
};

struct RunOptions
{
    std::optional<std::string> run_id;
    bool capture_env = false;
    std::shared_ptr<Clock> clock;                    // SystemClock when null
    std::optional<std::string> user;                 // $USER when unset
    std::optional<std::string> command_line;         // /proc/self/cmdline when unset
    std::string yprov_namespace = std::string(kDefaultYprovNamespace);
    StoreOptions store;
};

struct LoggedParameter
{
    std::string name;
    AttributeValue value;
    std::optional<Context> context;
    Direction direction = Direction::Output;
};

struct LoggedArtifact
{
    std::string name;
    std::filesystem::path path;  // absolute for inputs (referenced in place), else artifacts/<name>
    std::string digest;          // SHA-256 hex
    std::uint64_t byte_size = 0;
    std::optional<Context> context;
    Direction direction = Direction::Output;
    bool external = false;
};

struct RunArtifacts
{
    std::filesystem::path run_dir;
    std::filesystem::path prov_json_path;
    std::filesystem::path store_path;
};

enum class RunState { Active, Finalized };

/// Logging calls are safe from several threads. `end_run` needs exclusive access.
class RunHandle
{
public:
    RunHandle(RunHandle&&) noexcept;
    RunHandle& operator=(RunHandle&&) noexcept;
    /// Stops collectors. A run that never ended keeps its already-flushed chunks.
    ~RunHandle();

    [[nodiscard]] const ExperimentRef& experiment() const noexcept;
    [[nodiscard]] const std::string& run_id() const noexcept;
    [[nodiscard]] const std::filesystem::path& run_dir() const noexcept;
    [[nodiscard]] RunState state() const;

    /// Throws Finalized, DuplicateParameter.
    void log_param(std::string_view name, AttributeValue value, std::optional<Context> context = std::nullopt,
                   Direction direction = Direction::Output);

    /// Throws Finalized, NonMonotoneStep.
    void log_metric(std::string_view name, double value, const Context& context, std::uint64_t step,
                    std::uint32_t epoch = 0, Direction direction = Direction::Output);

    /// Outputs are copied into artifacts/; inputs are referenced in place.
    /// Throws Finalized, IoError, NameCollision.
    LoggedArtifact log_artifact(const std::filesystem::path& src_path, std::optional<std::string> name = std::nullopt,
                                std::optional<Context> context = std::nullopt,
                                Direction direction = Direction::Output);

    /// Polls immediately, then every `interval_ms` on a background thread; readings are
    /// logged under context SYSTEM with step = poll index.
    /// Throws Finalized, DuplicateCollectorId, InvalidArgument (interval < 10 ms).
    void register_collector(std::unique_ptr<Collector> collector, std::uint32_t interval_ms);

    /// Failed polls so far for a collector id.
    [[nodiscard]] std::uint64_t collector_errors(std::string_view collector_id) const;

    /// Throws Finalized on a second call, IoError.
    RunArtifacts end_run();

private:
    friend RunHandle start_run(const ExperimentRef& experiment, RunOptions options);

    struct Impl;
    explicit RunHandle(std::unique_ptr<Impl> impl);
    std::unique_ptr<Impl> impl_;
};

/// Throws InvalidArgument (unsafe names), DuplicateRunId, IoError.
RunHandle start_run(const ExperimentRef& experiment, RunOptions options = {});

/// Record ids used in the emitted document.
namespace ids {
QualifiedName experiment(std::string_view experiment_name);
QualifiedName run(std::string_view experiment_name, std::string_view run_id);
QualifiedName run_summary(std::string_view experiment_name, std::string_view run_id);
QualifiedName context(std::string_view run_id, const Context& context);
QualifiedName parameter(std::string_view run_id, const std::optional<Context>& context, std::string_view name);
QualifiedName metric(std::string_view run_id, const Context& context, std::string_view name);
QualifiedName artifact(std::string_view run_id, std::string_view name);
QualifiedName library_agent();
QualifiedName user_agent(std::string_view user);
}  // namespace ids

/// `prov:type` values tagging the tracker's entities.
namespace types {
inline constexpr std::string_view kParameter = "yprov4ml:Parameter";
inline constexpr std::string_view kMetricSeries = "yprov4ml:MetricSeries";
inline constexpr std::string_view kArtifact = "yprov4ml:Artifact";
inline constexpr std::string_view kRunSummary = "yprov4ml:RunSummary";
inline constexpr std::string_view kRunExecution = "yprov4ml:RunExecution";
inline constexpr std::string_view kContext = "yprov4ml:Context";
}  // namespace types

/// The `prov:type` attribute of a record as text, if present.
std::optional<std::string> prov_type(const ProvRecord& record);

}  // namespace yprov
