#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace carscore {

enum class ErrorCode {
    NotPositiveDefinite,
    DimensionMismatch,
    NotSymmetric,
    LambdaOutOfRange,
    DegenerateData,
    PerfectFit,
    EmptyGroup,
    IndexOutOfRange,
    OutOfSupport,
    InvalidParameters,
    NullUnavailable,
    InvalidCriterion,
    InvalidAlpha,
    FoldTooSmall,
    DegenerateFold,
    RankDeficient,
    TooManyVariables,
    MethodUnavailable,
    InvalidConfig,
    EmptyInput,
    ParseError,
    IoError,
};

/// Broad classes used by the command-line front end to pick an exit status.
enum class ErrorCategory { Usage, Data, Numerical };

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::NotSymmetric: return "NotSymmetric";
        case ErrorCode::LambdaOutOfRange: return "LambdaOutOfRange";
        case ErrorCode::DegenerateData: return "DegenerateData";
        case ErrorCode::PerfectFit: return "PerfectFit";
        case ErrorCode::EmptyGroup: return "EmptyGroup";
        case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::OutOfSupport: return "OutOfSupport";
        case ErrorCode::InvalidParameters: return "InvalidParameters";
        case ErrorCode::NullUnavailable: return "NullUnavailable";
        case ErrorCode::InvalidCriterion: return "InvalidCriterion";
        case ErrorCode::InvalidAlpha: return "InvalidAlpha";
        case ErrorCode::FoldTooSmall: return "FoldTooSmall";
        case ErrorCode::DegenerateFold: return "DegenerateFold";
        case ErrorCode::RankDeficient: return "RankDeficient";
        case ErrorCode::TooManyVariables: return "TooManyVariables";
        case ErrorCode::MethodUnavailable: return "MethodUnavailable";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

constexpr ErrorCategory category(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::NotPositiveDefinite:
        case ErrorCode::PerfectFit:
        case ErrorCode::RankDeficient:
        case ErrorCode::OutOfSupport:
            return ErrorCategory::Numerical;
        case ErrorCode::DimensionMismatch:
        case ErrorCode::NotSymmetric:
        case ErrorCode::DegenerateData:
        case ErrorCode::DegenerateFold:
        case ErrorCode::FoldTooSmall:
        case ErrorCode::TooManyVariables:
        case ErrorCode::EmptyInput:
        case ErrorCode::ParseError:
        case ErrorCode::IoError:
            return ErrorCategory::Data;
        default:
            return ErrorCategory::Usage;
    }
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, ErrorCode code, const std::string& what) {
    if (!condition) fail(code, what);
}

}  // namespace carscore
