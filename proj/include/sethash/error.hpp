#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sethash {

/// Failure categories. The CLI maps each to a distinct exit status.
enum class ErrorCode : int {
    invalid_argument = 2,
    missing_file = 3,
    format_error = 4,
    version_mismatch = 5,
    dimension_mismatch = 6,
    degenerate_data = 7,
    io_error = 8,
};

inline std::string_view error_code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::missing_file: return "missing_file";
    case ErrorCode::format_error: return "format_error";
    case ErrorCode::version_mismatch: return "version_mismatch";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::degenerate_data: return "degenerate_data";
    case ErrorCode::io_error: return "io_error";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

inline void require(bool condition, ErrorCode code, const std::string& what) {
    if (!condition) fail(code, what);
}

} // namespace sethash
