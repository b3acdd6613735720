#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bistab {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on the shape or range of an argument was violated.
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation (negative power, zero drive...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A numerical procedure did not converge or produced non-finite values.
class NumericalFailure : public Error {
public:
    using Error::Error;
};

/// Root bracketing failed; carries the (x, F(x)) scan that was searched.
class RootScanFailure : public NumericalFailure {
public:
    RootScanFailure(const std::string& what, std::vector<std::pair<double, double>> scan)
        : NumericalFailure(what), scan_(std::move(scan)) {}

    const std::vector<std::pair<double, double>>& scan() const noexcept { return scan_; }

private:
    std::vector<std::pair<double, double>> scan_;
};

/// Step size underflow in the explicit integrator.
class StiffnessError : public NumericalFailure {
public:
    using NumericalFailure::NumericalFailure;
};

/// Least-squares fit could not be formed (degenerate data, bad exponent).
class FitError : public Error {
public:
    using Error::Error;
};

/// Trajectory does not contain the feature an analysis expects (e.g. no branch transit).
class AnalysisError : public Error {
public:
    using Error::Error;
};

}  // namespace bistab
