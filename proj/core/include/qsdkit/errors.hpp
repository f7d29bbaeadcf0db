#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qsd {

/// Failure categories. `category()` groups them into the three outcomes the
/// command-line front end distinguishes (configuration, condition, numerics).
enum class Errc {
    // model_core
    SyntaxError,
    UnknownIdentifier,
    DomainError,
    UnknownModel,
    ParameterConstraintViolated,
    InvalidModel,
    // deterministic
    NoInteriorEquilibrium,
    MultipleInteriorEquilibria,
    UnstableInterior,
    // conditions / wkb
    DegenerateRates,
    ConditionViolated,
    NotBirthDeath,
    AssumptionViolated,
    PathOutsideDomain,
    IntegralDiverged,
    BoundaryDivergence,
    DecompositionFailed,
    SigmaNotPD,
    TooCloseToBoundary,
    // extinction
    NoPositiveRoot,
    InvalidState,
    // oracle
    StateSpaceTooLarge,
    NotConverged,
    TruncationMassTooLarge,
    // front end
    ConfigError,
};

enum class ErrorCategory { Config, Condition, Numerical };

std::string_view to_string(Errc code) noexcept;
ErrorCategory category(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

/// Parse failure with the byte offset into the source text.
class SyntaxError : public Error {
public:
    SyntaxError(std::size_t position, const std::string& what)
        : Error(Errc::SyntaxError, what + " at position " + std::to_string(position)),
          position_(position) {}

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

inline std::string_view to_string(Errc code) noexcept {
    switch (code) {
    case Errc::SyntaxError: return "SyntaxError";
    case Errc::UnknownIdentifier: return "UnknownIdentifier";
    case Errc::DomainError: return "DomainError";
    case Errc::UnknownModel: return "UnknownModel";
    case Errc::ParameterConstraintViolated: return "ParameterConstraintViolated";
    case Errc::InvalidModel: return "InvalidModel";
    case Errc::NoInteriorEquilibrium: return "NoInteriorEquilibrium";
    case Errc::MultipleInteriorEquilibria: return "MultipleInteriorEquilibria";
    case Errc::UnstableInterior: return "UnstableInterior";
    case Errc::DegenerateRates: return "DegenerateRates";
    case Errc::ConditionViolated: return "ConditionViolated";
    case Errc::NotBirthDeath: return "NotBirthDeath";
    case Errc::AssumptionViolated: return "AssumptionViolated";
    case Errc::PathOutsideDomain: return "PathOutsideDomain";
    case Errc::IntegralDiverged: return "IntegralDiverged";
    case Errc::BoundaryDivergence: return "BoundaryDivergence";
    case Errc::DecompositionFailed: return "DecompositionFailed";
    case Errc::SigmaNotPD: return "SigmaNotPD";
    case Errc::TooCloseToBoundary: return "TooCloseToBoundary";
    case Errc::NoPositiveRoot: return "NoPositiveRoot";
    case Errc::InvalidState: return "InvalidState";
    case Errc::StateSpaceTooLarge: return "StateSpaceTooLarge";
    case Errc::NotConverged: return "NotConverged";
    case Errc::TruncationMassTooLarge: return "TruncationMassTooLarge";
    case Errc::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

inline ErrorCategory category(Errc code) noexcept {
    switch (code) {
    case Errc::SyntaxError:
    case Errc::UnknownIdentifier:
    case Errc::UnknownModel:
    case Errc::ParameterConstraintViolated:
    case Errc::InvalidModel:
    case Errc::InvalidState:
    case Errc::ConfigError:
        return ErrorCategory::Config;
    case Errc::NoInteriorEquilibrium:
    case Errc::MultipleInteriorEquilibria:
    case Errc::UnstableInterior:
    case Errc::ConditionViolated:
    case Errc::NotBirthDeath:
    case Errc::AssumptionViolated:
    case Errc::NoPositiveRoot:
        return ErrorCategory::Condition;
    default:
        return ErrorCategory::Numerical;
    }
}

} // namespace qsd
