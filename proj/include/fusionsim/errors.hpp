#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace fusionsim {

/// Argument outside the mathematical domain of an operation (negative dt, rho > 1, ...).
struct InputDomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A caller broke an operation's contract (wrong branch, non-MAF trace, negative wait).
struct ContractError : std::logic_error {
    using std::logic_error::logic_error;
};

struct SingularityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Lookup of a time or node that is not stored.
struct LookupError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

/// Invalid configuration field. `field` is the dotted JSON path.
struct ConfigError : std::runtime_error {
    ConfigError(std::string field, const std::string& what)
        : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Iterative solver stopped at its iteration cap.
struct IterationLimitError : std::runtime_error {
    IterationLimitError(const std::string& what, double residual, std::vector<double> trace = {})
        : std::runtime_error(what), residual_(residual), trace_(std::move(trace)) {}
    double residual() const noexcept { return residual_; }
    /// Dinkelbach multiplier history, empty for plain RVI failures.
    const std::vector<double>& trace() const noexcept { return trace_; }

private:
    double residual_;
    std::vector<double> trace_;
};

/// Golden-section bracket has its minimum on the upper bound.
struct BoundExpansionError : std::runtime_error {
    BoundExpansionError(const std::string& what, double high)
        : std::runtime_error(what), high_(high) {}
    double high() const noexcept { return high_; }

private:
    double high_;
};

/// A verification property or reproduction check did not hold.
struct VerificationFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InternalInvariantError : std::logic_error {
    using std::logic_error::logic_error;
};

} // namespace fusionsim
