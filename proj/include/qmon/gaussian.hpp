#pragma once

#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "qmon/types.hpp"

namespace qmon {

using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

// Phase-space ordering r = (q1, p1, ..., qn, pn); covariance sigma = <{dr, dr^T}>, so
// the vacuum has sigma = 1.

struct GaussianModel {
    int n_modes = 1;
    RealMatrix A;   // drift
    RealMatrix D;   // diffusion
    RealMatrix B;   // monitoring, 2n x m
    RealMatrix E;   // monitoring, 2n x m

    Eigen::Index dim() const { return 2 * n_modes; }
    Eigen::Index outputs() const { return B.cols(); }
    void validate() const;
};

struct GaussianState {
    RealVector r;
    RealMatrix sigma;
};

/// Symplectic form, direct sum of [[0, 1], [-1, 0]].
RealMatrix symplectic_form(int n_modes);
/// sigma + i Omega >= -tol.
bool is_physical_covariance(const RealMatrix& sigma, double tol = 1e-8);
/// "q1", "p1", ... for index i.
std::string phase_space_label(Eigen::Index i);

struct MomentRates {
    RealVector dr;
    RealMatrix dsigma;
};

MomentRates unconditional_moment_rhs(const GaussianModel& model, const GaussianState& state);

/// A sigma + sigma A^T + D - (E - sigma B)(E - sigma B)^T.
RealMatrix riccati_rhs(const GaussianModel& model, const RealMatrix& sigma);

enum class Stability { stable, marginal, unstable };

struct HurwitzReport {
    Stability status = Stability::unstable;
    double max_real_part = 0.0;
    bool stable() const { return status == Stability::stable; }
};

inline constexpr double kHurwitzMargin = 1e-10;
HurwitzReport hurwitz(const RealMatrix& A, double margin = kHurwitzMargin);

/// X with A X + X A^T + Q = 0; throws StabilityError unless A is Hurwitz.
RealMatrix lyapunov_solve(const RealMatrix& A, const RealMatrix& Q);

/// Stabilizing Y with A^T Y + Y A + P - Y S Y = 0 (Newton-Kleinman).
RealMatrix care_solve(const RealMatrix& A, const RealMatrix& P, const RealMatrix& S, int max_iter = 100);

/// Conditional steady state: riccati_rhs(sigma) = 0 with the stabilizing root.
RealMatrix riccati_steady_state(const GaussianModel& model);

/// Unconditional steady covariance, A sigma + sigma A^T + D = 0.
RealMatrix unconditional_steady_state(const GaussianModel& model);

struct NoControl {};
/// u = -K r
struct StateFeedback {
    RealMatrix F, K;
};
/// u dt = M dy
struct CurrentFeedback {
    RealMatrix F, M;
};
using ControlLaw = std::variant<NoControl, StateFeedback, CurrentFeedback>;

struct ConditionalOutcome {
    GaussianState state;
    RealVector dy;
};

/// r by Euler-Maruyama, sigma by one RK4 step of the Riccati flow; dy = -sqrt2 B^T r dt + dw.
ConditionalOutcome conditional_step(const GaussianState& state, const GaussianModel& model, double dt,
                                    const RealVector& dw, const ControlLaw& control = NoControl{});

struct LqgGain {
    RealMatrix K;
    RealMatrix Y;
    HurwitzReport closed_loop;
};

/// K = Q^-1 F^T Y with A^T Y + Y A + P - Y F Q^-1 F^T Y = 0.
LqgGain lqg_gain(const GaussianModel& model, const RealMatrix& F, const RealMatrix& P, const RealMatrix& Q);

/// Lyapunov solution for A - FK with source (E - sigma_c B)(E - sigma_c B)^T.
RealMatrix excess_noise_ss(const GaussianModel& model, const RealMatrix& F, const RealMatrix& K);

struct MarkovianGain {
    RealMatrix M;
    RealMatrix A_prime;   // A - sqrt2 F M B^T
    HurwitzReport closed_loop;
};

/// Least-squares solution of F M = -(E - sigma_c B)/sqrt2, rejected unless exact to 1e-10.
MarkovianGain markovian_gain(const GaussianModel& model, const RealMatrix& F);

struct ClosedLoopSteadyState {
    RealMatrix sigma_c;
    RealMatrix Sigma;
    RealMatrix sigma_unc;
    HurwitzReport closed_loop;
    bool mean_decays = false;
};

ClosedLoopSteadyState closed_loop_unconditional(const GaussianModel& model, const ControlLaw& control);

/// Degenerate parametric oscillator monitored on q with efficiency eta.
GaussianModel opo_model(double chi, double kappa, double eta);

struct OpoReference {
    RealMatrix sigma_unc;
    RealMatrix sigma_c;
    double M_opt_11 = 0.0;
    double f_A = 0.0;
    double f_B = 0.0;
};

/// Closed forms for the OPO at eta = 1; needs |chi| < kappa/2, q > 0, lambda != 0.
OpoReference opo_reference(double chi, double kappa, double lambda, double q);

}  // namespace qmon
