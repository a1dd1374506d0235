#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace loyalty {

enum class ErrorCode {
    MalformedInstance,
    DegenerateChain,
    PeriodicChain,
    IterationCap,
    ZeroRevenue,
    NonIntegralPartition,
    ProbabilityAtBoundary,
    DegenerateDesign,
    InvalidDelta,
    HorizonTooShort,
    OutOfRange,
    InvalidConfig,
    Io,
};

std::string_view error_code_name(ErrorCode code) noexcept;

/// Single exception type for the library; callers switch on code().
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace loyalty
