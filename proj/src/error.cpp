#include "yprov/error.hpp"

namespace yprov {

std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::UndeclaredPrefix: return "UndeclaredPrefix";
    case ErrorCode::DanglingReference: return "DanglingReference";
    case ErrorCode::EndpointKindMismatch: return "EndpointKindMismatch";
    case ErrorCode::TimestampInversion: return "TimestampInversion";
    case ErrorCode::UnknownId: return "UnknownId";
    case ErrorCode::InvalidDocument: return "InvalidDocument";
    case ErrorCode::MalformedJson: return "MalformedJson";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::IntegrityError: return "IntegrityError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::AlreadyExists: return "AlreadyExists";
    case ErrorCode::NonMonotoneStep: return "NonMonotoneStep";
    case ErrorCode::Finalized: return "Finalized";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::UnknownSeries: return "UnknownSeries";
    case ErrorCode::DuplicateRunId: return "DuplicateRunId";
    case ErrorCode::DuplicateParameter: return "DuplicateParameter";
    case ErrorCode::NameCollision: return "NameCollision";
    case ErrorCode::DuplicateCollectorId: return "DuplicateCollectorId";
    case ErrorCode::LayoutError: return "LayoutError";
    case ErrorCode::ConflictError: return "ConflictError";
    case ErrorCode::MixedExperiments: return "MixedExperiments";
    case ErrorCode::MalformedManifest: return "MalformedManifest";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message) :
    std::runtime_error(std::string(to_string(code)) + ": " + message),
    code_(code)
{}

namespace {
std::string join_ids(const std::vector<std::string>& ids)
{
    std::string out;
    for (const auto& id : ids) {
        if (!out.empty()) {
            out += ", ";
        }
        out += id;
    }
    return out;
}
}  // namespace

ConflictError::ConflictError(std::vector<std::string> ids) :
    Error(ErrorCode::ConflictError, "conflicting records: " + join_ids(ids)),
    ids_(std::move(ids))
{}

void fail(ErrorCode code, const std::string& message)
{
    throw Error(code, message);
}

}  // namespace yprov
