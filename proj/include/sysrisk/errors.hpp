#pragma once

#include <stdexcept>
#include <string>

namespace sysrisk {

enum class ErrorCode {
    InvalidDistribution,
    DegenerateEtaSB,
    NonPositiveLiability,
    InvalidConfig,
    IsolatedRow,
    ZeroEtaBar,
    DimensionMismatch,
    NoConvergence,
    RequiresDeterministicY,
    RequiresIndicatorEta,
    EpsilonExceedsY,
    NoConsistentRegime,
    HypothesisViolated,
    MissingRecoveryParams,
};

[[nodiscard]] constexpr const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidDistribution: return "InvalidDistribution";
        case ErrorCode::DegenerateEtaSB: return "DegenerateEtaSB";
        case ErrorCode::NonPositiveLiability: return "NonPositiveLiability";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::IsolatedRow: return "IsolatedRow";
        case ErrorCode::ZeroEtaBar: return "ZeroEtaBar";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::RequiresDeterministicY: return "RequiresDeterministicY";
        case ErrorCode::RequiresIndicatorEta: return "RequiresIndicatorEta";
        case ErrorCode::EpsilonExceedsY: return "EpsilonExceedsY";
        case ErrorCode::NoConsistentRegime: return "NoConsistentRegime";
        case ErrorCode::HypothesisViolated: return "HypothesisViolated";
        case ErrorCode::MissingRecoveryParams: return "MissingRecoveryParams";
    }
    return "Unknown";
}

/// Library-wide exception carrying a machine-readable code.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Thrown when an iterative solver exhausts its iteration budget.
class NoConvergenceError : public Error {
public:
    NoConvergenceError(const std::string& what, double last_residual, long iterations)
        : Error(ErrorCode::NoConvergence, what), last_residual_(last_residual), iterations_(iterations) {}

    [[nodiscard]] double last_residual() const noexcept { return last_residual_; }
    [[nodiscard]] long iterations() const noexcept { return iterations_; }

private:
    double last_residual_;
    long iterations_;
};

}  // namespace sysrisk
