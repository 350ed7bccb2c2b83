#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qmon {

using cplx = std::complex<double>;

/// Dense operator on a truncated Hilbert space.
using Operator = Eigen::MatrixXcd;
/// Density matrices share the operator representation; validity is checked by validate_state().
using DensityMatrix = Eigen::MatrixXcd;
using StateVector = Eigen::VectorXcd;

inline constexpr cplx kI{0.0, 1.0};

/// Numerical tolerances used for state and model validation.
struct Tolerances {
    double hermiticity = 1e-10;
    double trace = 1e-9;
    double positivity = 1e-10;
    /// Population allowed in the highest Fock level before a state is flagged as leaking.
    double truncation_leak = 1e-6;
};

inline constexpr Tolerances kDefaultTolerances{};

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Invalid model or parameter (non-Hermitian H, negative rate, unphysical bath, ...).
class ModelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A single integration step could not be taken (step too large, jump from a dark state, ...).
class StepError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a closed loop or drift matrix is required to be Hurwitz and is not.
class StabilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class PhysicalityViolation : public std::runtime_error {
public:
    PhysicalityViolation(const std::string& what, std::size_t step)
        : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

}  // namespace qmon
