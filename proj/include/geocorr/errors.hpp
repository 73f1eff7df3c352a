#pragma once

#include <stdexcept>
#include <string>

namespace geocorr {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Adaptive quadrature ran out of refinement budget.
class QuadratureError : public std::runtime_error {
public:
    QuadratureError(const std::string& what, double estimate, double error_estimate);
    double estimate() const noexcept { return estimate_; }
    double error_estimate() const noexcept { return error_estimate_; }

private:
    double estimate_;
    double error_estimate_;
};

/// Failure in the radial kernel solver (step failure, underflow, non-finite normalization).
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Energy quadrature needs a finer autocorrelation grid near the origin.
class RefinementError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace geocorr
