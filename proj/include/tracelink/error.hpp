#pragma once

#include <stdexcept>
#include <string>

namespace tracelink {

enum class ErrorKind {
    IoError,
    MalformedHeader,
    MalformedRecord,
    MalformedValue,
    DimensionMismatch,
    CountMismatch,
    LengthMismatch,
    ShapeMismatch,
    IdOrderMismatch,
    IndexOutOfRange,
    ModelMismatch,
    EmptyDataset,
    SelfLink,
    MissingId,
    StaleCache,
    NoNegativesAvailable,
    MalformedModelFile,
    UnknownTag,
    UnknownMetricTag,
    EmptyQuery,
    InvalidConfig,
};

const char* error_kind_name(ErrorKind kind);

/// Single exception type for the whole library; the kind tells callers
/// (and tests) which contract was violated.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message),
          kind_(kind),
          message_(message) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& message() const noexcept { return message_; }

private:
    ErrorKind kind_;
    std::string message_;
};

} // namespace tracelink
