#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace yprov {

enum class ErrorCode {
    InvalidArgument,
    // prov-core
    DuplicateId,
    UndeclaredPrefix,
    DanglingReference,
    EndpointKindMismatch,
    TimestampInversion,
    UnknownId,
    InvalidDocument,
    // prov-json-io
    MalformedJson,
    SchemaError,
    IntegrityError,
    // metric-store
    IoError,
    AlreadyExists,
    NonMonotoneStep,
    Finalized,
    CorruptFile,
    UnknownSeries,
    // tracker
    DuplicateRunId,
    DuplicateParameter,
    NameCollision,
    DuplicateCollectorId,
    // graph-tools / crate-pack
    LayoutError,
    ConflictError,
    MixedExperiments,
    MalformedManifest,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error
{
public:
    Error(ErrorCode code, const std::string& message);

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Raised by merge; carries every conflicting id.
class ConflictError : public Error
{
public:
    explicit ConflictError(std::vector<std::string> ids);

    [[nodiscard]] const std::vector<std::string>& ids() const noexcept { return ids_; }

private:
    std::vector<std::string> ids_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace yprov
