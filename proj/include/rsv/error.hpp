#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rsv {

enum class ErrorCode {
    invalid_argument,
    length_mismatch,
    non_positive_depth,
    singular_factorization,
    non_zero_mean,
    above_threshold,
    support_too_wide,
    trace_left_domain,
    no_blowup_detected,
    window_too_narrow,
    non_negative_input,
    config_error,
    wrap_violation,
    version_or_shape_mismatch,
    corrupt_checkpoint,
    io_error,
};

inline std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::length_mismatch: return "LengthMismatch";
    case ErrorCode::non_positive_depth: return "NonPositiveDepth";
    case ErrorCode::singular_factorization: return "SingularFactorization";
    case ErrorCode::non_zero_mean: return "NonZeroMean";
    case ErrorCode::above_threshold: return "AboveThreshold";
    case ErrorCode::support_too_wide: return "SupportTooWide";
    case ErrorCode::trace_left_domain: return "TraceLeftDomain";
    case ErrorCode::no_blowup_detected: return "NoBlowupDetected";
    case ErrorCode::window_too_narrow: return "WindowTooNarrow";
    case ErrorCode::non_negative_input: return "NonNegativeInput";
    case ErrorCode::config_error: return "ConfigError";
    case ErrorCode::wrap_violation: return "WrapViolation";
    case ErrorCode::version_or_shape_mismatch: return "VersionOrShapeMismatch";
    case ErrorCode::corrupt_checkpoint: return "CorruptCheckpoint";
    case ErrorCode::io_error: return "IoError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {
    }

    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& what)
{
    if (!condition) {
        throw Error(code, what);
    }
}

} // namespace rsv
