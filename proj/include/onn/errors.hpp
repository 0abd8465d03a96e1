#pragma once

#include <stdexcept>
#include <string>

namespace onn {

enum class ErrorCode {
    BadMagic,
    Truncated,
    TrailingBytes,
    WrongCount,
    OutOfRange,
    ShapeMismatch,
    NotLoaded,
    SignAmbiguity,
    DegenerateFit,
    RecordMismatch,
    NonFiniteLoss,
    ParseError,
    UnknownKey,
    InvalidConfig,
    Io,
};

const char* to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class OnnError : public std::runtime_error {
public:
    OnnError(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace onn
