#pragma once

#include <cstddef>
#include <vector>

#include "qmon/core_ops.hpp"
#include "qmon/types.hpp"

namespace qmon {

/// Broadband Gaussian bath statistics. Vacuum is (0, 0, 0).
struct BathSpec {
    double N = 0.0;       ///< mean thermal photon number
    cplx M = 0.0;         ///< squeezing correlation
    cplx beta = 0.0;      ///< coherent drive amplitude

    bool is_vacuum() const { return N == 0.0 && M == cplx{} && beta == cplx{}; }
    /// Gaussian-noise part only (drive ignored).
    bool is_white_vacuum() const { return N == 0.0 && M == cplx{}; }
    /// |M|^2 <= N(N+1) and N >= 0.
    bool is_physical(double tol = 1e-12) const;

    bool operator==(const BathSpec&) const = default;
};

struct Channel {
    double rate = 0.0;
    Operator op;
};

/// Hamiltonian, weighted collapse channels, bath, detection efficiency and homodyne phase.
///
/// Trajectory steppers monitor channels.front(); any further channels are
/// treated as unmonitored losses and enter only through their dissipators.
struct OpenSystemModel {
    Operator H;
    std::vector<Channel> channels;
    BathSpec bath;
    double eta = 1.0;
    double theta = 0.0;

    Eigen::Index dim() const { return H.rows(); }
    /// Throws ModelError / DimensionError on a malformed model.
    void validate(const Tolerances& tol = kDefaultTolerances) const;
};

/// Uniform time grid t_k = k dt, k = 0..steps.
struct TimeGrid {
    double dt = 0.0;
    std::size_t steps = 0;

    static TimeGrid from_final(double dt, double t_final);
    double time(std::size_t k) const { return static_cast<double>(k) * dt; }
    std::size_t size() const { return steps + 1; }
    double t_final() const { return time(steps); }
};

/// Vacuum-bath Lindbladian: -i[H, rho] + sum_i k_i D[c_i] rho.
Operator liouvillian_apply(const OpenSystemModel& model, const DensityMatrix& rho);

/// kappa(N+1)D[c] + kappa N D[c^dag] + (kappa M/2)[c^dag,[c^dag,.]] + (kappa M*/2)[c,[c,.]]
/// per channel, plus -i[H + H_beta, rho] with the coherent drive of every channel.
Operator generalized_bath_me_rhs(const OpenSystemModel& model, const DensityMatrix& rho);

/// Dispatches to liouvillian_apply for a vacuum bath, generalized_bath_me_rhs otherwise.
Operator lindblad_rhs(const OpenSystemModel& model, const DensityMatrix& rho);

/// H_beta = i sqrt(kappa) (beta* c - beta c^dag).
Operator coherent_drive_hamiltonian(const Operator& c, double kappa, cplx beta);

/// Largest Hilbert dimension accepted by liouvillian_matrix (superoperator is dim^2 x dim^2).
inline constexpr Eigen::Index kMaxSuperoperatorDim = 64;

/// Column-stacking superoperator: vec(L rho) = L vec(rho). Handles generalized baths too.
Eigen::MatrixXcd liouvillian_matrix(const OpenSystemModel& model);

Eigen::VectorXcd vec(const DensityMatrix& rho);
DensityMatrix unvec(const Eigen::VectorXcd& v, Eigen::Index dim);

/// exp(t L) acting on density matrices.
class Propagator {
public:
    Propagator(const OpenSystemModel& model, double t);
    DensityMatrix apply(const DensityMatrix& rho) const;
    const Eigen::MatrixXcd& matrix() const { return map_; }

private:
    Eigen::Index dim_;
    Eigen::MatrixXcd map_;
};

DensityMatrix propagate(const OpenSystemModel& model, const DensityMatrix& rho, double t);

/// Unit-trace stationary state from the kernel of the Liouvillian.
DensityMatrix steady_state(const OpenSystemModel& model);

enum class MeStepper { rk4, expm };

/// Hamiltonian held constant on [previous t_end, t_end).
struct HamiltonianSegment {
    double t_end;
    Operator H;
};
using HamiltonianSchedule = std::vector<HamiltonianSegment>;

/// Maximum trace change tolerated in a single deterministic step.
inline constexpr double kMaxTraceDriftPerStep = 1e-8;

std::vector<DensityMatrix> integrate_me(const OpenSystemModel& model, const DensityMatrix& rho0,
                                        const TimeGrid& grid, MeStepper stepper = MeStepper::rk4);

/// Piecewise-constant Hamiltonian; the model's own H is ignored.
std::vector<DensityMatrix> integrate_me(const OpenSystemModel& model, const HamiltonianSchedule& schedule,
                                        const DensityMatrix& rho0, const TimeGrid& grid,
                                        MeStepper stepper = MeStepper::rk4);

}  // namespace qmon
