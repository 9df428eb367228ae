#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace depthjitter {

enum class ErrorCode {
    InvalidArgument,
    DimensionMismatch,
    NonFinite,
    Overflow,
    EmptyInput,
    InsufficientBins,
    InsufficientPixels,
    DegenerateDepth,
    DecodeError,
    IoError,
    MissingRecord,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Structured error carrying a stable code alongside a human readable message.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace depthjitter
