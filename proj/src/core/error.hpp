#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace tkan {

enum class ErrorCode {
    invalid_argument,
    dimension_mismatch,
    parse,
    io,
    corrupt,
    version_mismatch,
    shape_mismatch,
    divergence,
    not_finite,
    out_of_range,
    missing_horizon,
    empty_input,
};

// All recoverable failures in the core are reported as Error; the C API
// boundary translates the code into a status enum.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message)
        : std::runtime_error(std::move(message)), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, std::string message) {
    throw Error(code, std::move(message));
}

inline void require(bool cond, ErrorCode code, const std::string& message) {
    if (!cond) fail(code, message);
}

}  // namespace tkan
