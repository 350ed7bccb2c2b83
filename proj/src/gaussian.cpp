#include "qmon/gaussian.hpp"

#include <cmath>
#include <optional>
#include <string>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

namespace qmon {

namespace {

constexpr int kMaxModes = 8;

void require_dims(const RealMatrix& m, Eigen::Index rows, Eigen::Index cols, const char* what) {
    if (m.rows() != rows || m.cols() != cols) {
        throw DimensionError(std::string(what) + ": expected " + std::to_string(rows) + "x" + std::to_string(cols) +
                             ", got " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
}

double sym_defect(const RealMatrix& m) { return (m - m.transpose()).cwiseAbs().maxCoeff(); }

RealMatrix symmetrize(const RealMatrix& m) { return 0.5 * (m + m.transpose()); }

double min_sym_eigenvalue(const RealMatrix& m) {
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

RealMatrix care_residual(const RealMatrix& A, const RealMatrix& P, const RealMatrix& S, const RealMatrix& Y) {
    return A.transpose() * Y + Y * A + P - Y * S * Y;
}

// Stable invariant subspace of the Hamiltonian matrix [[A, -S], [-P, -A^T]].
std::optional<RealMatrix> hamiltonian_seed(const RealMatrix& A, const RealMatrix& P, const RealMatrix& S) {
    const Eigen::Index n = A.rows();
    RealMatrix H(2 * n, 2 * n);
    H << A, -S, -P, -A.transpose();
    Eigen::EigenSolver<RealMatrix> es(H);
    if (es.info() != Eigen::Success) return std::nullopt;
    Eigen::MatrixXcd U(2 * n, n);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < 2 * n && k < n; ++i) {
        if (es.eigenvalues()(i).real() < 0.0) U.col(k++) = es.eigenvectors().col(i);
    }
    if (k != n) return std::nullopt;
    const Eigen::MatrixXcd U1 = U.topRows(n);
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(U1);
    if (!lu.isInvertible()) return std::nullopt;
    const Eigen::MatrixXcd Y = U.bottomRows(n) * lu.inverse();
    return symmetrize(Y.real());
}

RealMatrix care_newton(const RealMatrix& A, const RealMatrix& P, const RealMatrix& S,
                       const std::optional<RealMatrix>& seed, int max_iter) {
    const Eigen::Index n = A.rows();
    require_dims(A, n, n, "care_solve A");
    require_dims(P, n, n, "care_solve P");
    require_dims(S, n, n, "care_solve S");

    std::optional<RealMatrix> Y0;
    if (seed && hurwitz(A - S * *seed).stable()) {
        Y0 = *seed;
    } else if (hurwitz(A).stable()) {
        Y0 = RealMatrix::Zero(n, n);
    } else {
        Y0 = hamiltonian_seed(A, P, S);
        if (!Y0 || !hurwitz(A - S * *Y0).stable()) {
            throw ConvergenceError("care_solve: no stabilizing solution found (pair not stabilizable)");
        }
    }

    RealMatrix Y = *Y0;
    const double scale = std::max({1.0, P.norm(), A.norm()});
    for (int it = 0; it < max_iter; ++it) {
        const RealMatrix Acl = A - S * Y;
        RealMatrix next;
        try {
            next = lyapunov_solve(Acl.transpose(), P + Y * S * Y);
        } catch (const StabilityError&) {
            throw ConvergenceError("care_solve: Newton iterate lost stability at iteration " + std::to_string(it));
        }
        const double change = (next - Y).norm();
        Y = next;
        if (change <= 1e-14 * std::max(1.0, Y.norm())) break;
    }
    const double res = care_residual(A, P, S, Y).cwiseAbs().maxCoeff();
    if (!(res <= 1e-10 * scale)) {
        throw ConvergenceError("care_solve: residual " + std::to_string(res) + " after " + std::to_string(max_iter) +
                               " iterations");
    }
    return Y;
}

RealMatrix riccati_steady_state_seeded(const GaussianModel& model) {
    // A~ s + s A~^T + (D - E E^T) - s B B^T s = 0 with A~ = A + E B^T
    const RealMatrix At = model.A + model.E * model.B.transpose();
    const RealMatrix Qt = model.D - model.E * model.E.transpose();
    const RealMatrix R = model.B * model.B.transpose();
    std::optional<RealMatrix> seed;
    if (hurwitz(model.A).stable()) seed = lyapunov_solve(model.A, model.D);
    return care_newton(At.transpose(), Qt, R, seed, 100);
}

}  // namespace

void GaussianModel::validate() const {
    if (n_modes < 1 || n_modes > kMaxModes) {
        throw DimensionError("GaussianModel: n_modes must be in [1, " + std::to_string(kMaxModes) + "]");
    }
    const Eigen::Index n = dim();
    require_dims(A, n, n, "GaussianModel.A");
    require_dims(D, n, n, "GaussianModel.D");
    if (B.rows() != n || E.rows() != n || B.cols() != E.cols()) {
        throw DimensionError("GaussianModel: B and E must both be 2n x m");
    }
    if (!A.allFinite() || !D.allFinite() || !B.allFinite() || !E.allFinite()) {
        throw ModelError("GaussianModel: non-finite entries");
    }
    if (sym_defect(D) > 1e-12) throw ModelError("GaussianModel: D is not symmetric");
    if (min_sym_eigenvalue(D) < -1e-12) throw ModelError("GaussianModel: D is not positive semidefinite");
}

RealMatrix symplectic_form(int n_modes) {
    RealMatrix O = RealMatrix::Zero(2 * n_modes, 2 * n_modes);
    for (int j = 0; j < n_modes; ++j) {
        O(2 * j, 2 * j + 1) = 1.0;
        O(2 * j + 1, 2 * j) = -1.0;
    }
    return O;
}

bool is_physical_covariance(const RealMatrix& sigma, double tol) {
    if (sigma.rows() != sigma.cols() || sigma.rows() % 2 != 0) return false;
    if (sym_defect(sigma) > 1e-10) return false;
    const int n = static_cast<int>(sigma.rows() / 2);
    const Eigen::MatrixXcd m = sigma.cast<cplx>() + kI * symplectic_form(n).cast<cplx>();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() >= -tol;
}

std::string phase_space_label(Eigen::Index i) {
    return std::string(i % 2 == 0 ? "q" : "p") + std::to_string(i / 2 + 1);
}

MomentRates unconditional_moment_rhs(const GaussianModel& model, const GaussianState& state) {
    const Eigen::Index n = model.dim();
    if (state.r.size() != n) throw DimensionError("unconditional_moment_rhs: r has the wrong size");
    require_dims(state.sigma, n, n, "unconditional_moment_rhs sigma");
    require_dims(model.A, n, n, "unconditional_moment_rhs A");
    require_dims(model.D, n, n, "unconditional_moment_rhs D");
    return {model.A * state.r, symmetrize(model.A * state.sigma + state.sigma * model.A.transpose() + model.D)};
}

RealMatrix riccati_rhs(const GaussianModel& model, const RealMatrix& sigma) {
    const Eigen::Index n = model.dim();
    require_dims(sigma, n, n, "riccati_rhs sigma");
    const RealMatrix L = model.E - sigma * model.B;
    return symmetrize(model.A * sigma + sigma * model.A.transpose() + model.D - L * L.transpose());
}

HurwitzReport hurwitz(const RealMatrix& A, double margin) {
    if (A.rows() != A.cols() || A.rows() == 0) throw DimensionError("hurwitz: square matrix required");
    Eigen::EigenSolver<RealMatrix> es(A, false);
    HurwitzReport rep;
    rep.max_real_part = es.eigenvalues().real().maxCoeff();
    if (rep.max_real_part <= -margin) {
        rep.status = Stability::stable;
    } else if (rep.max_real_part < margin) {
        rep.status = Stability::marginal;
    } else {
        rep.status = Stability::unstable;
    }
    return rep;
}

RealMatrix lyapunov_solve(const RealMatrix& A, const RealMatrix& Q) {
    const Eigen::Index n = A.rows();
    require_dims(A, n, n, "lyapunov_solve A");
    require_dims(Q, n, n, "lyapunov_solve Q");
    if (n > 2 * kMaxModes) throw DimensionError("lyapunov_solve: dimension above the dense-solve limit");
    const HurwitzReport rep = hurwitz(A);
    if (!rep.stable()) {
        throw StabilityError("lyapunov_solve: matrix is not Hurwitz (max Re eigenvalue " +
                             std::to_string(rep.max_real_part) + ")");
    }
    const RealMatrix I = RealMatrix::Identity(n, n);
    const RealMatrix K = Eigen::kroneckerProduct(I, A).eval() + Eigen::kroneckerProduct(A, I).eval();
    const RealVector q = Eigen::Map<const RealVector>(Q.data(), n * n);
    const RealVector x = K.partialPivLu().solve(-q);
    return symmetrize(Eigen::Map<const RealMatrix>(x.data(), n, n));
}

RealMatrix care_solve(const RealMatrix& A, const RealMatrix& P, const RealMatrix& S, int max_iter) {
    return care_newton(A, P, S, std::nullopt, max_iter);
}

RealMatrix riccati_steady_state(const GaussianModel& model) {
    model.validate();
    const RealMatrix sigma = riccati_steady_state_seeded(model);
    const double res = riccati_rhs(model, sigma).cwiseAbs().maxCoeff();
    if (!(res <= 1e-10 * std::max(1.0, sigma.norm()))) {
        throw ConvergenceError("riccati_steady_state: residual " + std::to_string(res));
    }
    return sigma;
}

RealMatrix unconditional_steady_state(const GaussianModel& model) {
    model.validate();
    return lyapunov_solve(model.A, model.D);
}

ConditionalOutcome conditional_step(const GaussianState& state, const GaussianModel& model, double dt,
                                    const RealVector& dw, const ControlLaw& control) {
    const Eigen::Index n = model.dim();
    if (!(dt > 0.0)) throw std::invalid_argument("conditional_step: dt must be > 0");
    if (state.r.size() != n) throw DimensionError("conditional_step: r has the wrong size");
    require_dims(state.sigma, n, n, "conditional_step sigma");
    if (dw.size() != model.outputs()) throw DimensionError("conditional_step: dw has the wrong size");

    const RealMatrix& s = state.sigma;
    const RealVector dy = -std::sqrt(2.0) * model.B.transpose() * state.r * dt + dw;
    RealVector r = state.r + model.A * state.r * dt + (model.E - s * model.B) * dw / std::sqrt(2.0);
    if (const auto* sf = std::get_if<StateFeedback>(&control)) {
        r -= sf->F * (sf->K * state.r) * dt;
    } else if (const auto* cf = std::get_if<CurrentFeedback>(&control)) {
        r += cf->F * (cf->M * dy);
    }

    const RealMatrix k1 = riccati_rhs(model, s);
    const RealMatrix k2 = riccati_rhs(model, s + 0.5 * dt * k1);
    const RealMatrix k3 = riccati_rhs(model, s + 0.5 * dt * k2);
    const RealMatrix k4 = riccati_rhs(model, s + dt * k3);
    RealMatrix sigma = symmetrize(s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    return {{r, sigma}, dy};
}

LqgGain lqg_gain(const GaussianModel& model, const RealMatrix& F, const RealMatrix& P, const RealMatrix& Q) {
    model.validate();
    const Eigen::Index n = model.dim();
    if (F.rows() != n) throw DimensionError("lqg_gain: F must have 2n rows");
    const Eigen::Index k = F.cols();
    require_dims(P, n, n, "lqg_gain P");
    require_dims(Q, k, k, "lqg_gain Q");
    if (sym_defect(P) > 1e-12 || min_sym_eigenvalue(P) < -1e-12) {
        throw ModelError("lqg_gain: P must be symmetric positive semidefinite");
    }
    Eigen::LLT<RealMatrix> llt(symmetrize(Q));
    if (sym_defect(Q) > 1e-12 || llt.info() != Eigen::Success) {
        throw ModelError("lqg_gain: Q must be symmetric positive definite");
    }
    const RealMatrix QinvFt = llt.solve(F.transpose());
    const RealMatrix S = symmetrize(F * QinvFt);
    LqgGain out;
    out.Y = care_newton(model.A, P, S, std::nullopt, 100);
    out.K = QinvFt * out.Y;
    out.closed_loop = hurwitz(model.A - F * out.K);
    return out;
}

RealMatrix excess_noise_ss(const GaussianModel& model, const RealMatrix& F, const RealMatrix& K) {
    model.validate();
    if (F.rows() != model.dim() || K.cols() != model.dim() || F.cols() != K.rows()) {
        throw DimensionError("excess_noise_ss: F (2n x k) and K (k x 2n) required");
    }
    const RealMatrix sigma_c = riccati_steady_state(model);
    const RealMatrix L = model.E - sigma_c * model.B;
    const RealMatrix Acl = model.A - F * K;
    if (!hurwitz(Acl).stable()) throw StabilityError("excess_noise_ss: closed loop A - FK is not Hurwitz");
    return lyapunov_solve(Acl, L * L.transpose());
}

MarkovianGain markovian_gain(const GaussianModel& model, const RealMatrix& F) {
    model.validate();
    const Eigen::Index n = model.dim();
    if (F.rows() != n) throw DimensionError("markovian_gain: F must have 2n rows");
    const RealMatrix sigma_c = riccati_steady_state(model);
    const RealMatrix target = -(model.E - sigma_c * model.B) / std::sqrt(2.0);
    MarkovianGain out;
    out.M = F.completeOrthogonalDecomposition().solve(target);
    const RealMatrix residual = F * out.M - target;
    std::string unreachable;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (residual.row(i).cwiseAbs().maxCoeff() > 1e-10) {
            unreachable += (unreachable.empty() ? "" : ", ") + phase_space_label(i);
        }
    }
    if (!unreachable.empty()) {
        throw ModelError("markovian_gain: stochastic drive along " + unreachable +
                         " is not reachable by the feedback matrix F");
    }
    out.A_prime = model.A - std::sqrt(2.0) * F * out.M * model.B.transpose();
    out.closed_loop = hurwitz(out.A_prime);
    return out;
}

ClosedLoopSteadyState closed_loop_unconditional(const GaussianModel& model, const ControlLaw& control) {
    model.validate();
    ClosedLoopSteadyState out;
    out.sigma_c = riccati_steady_state(model);
    const RealMatrix L = model.E - out.sigma_c * model.B;
    RealMatrix Acl = model.A;
    RealMatrix source = L * L.transpose();
    if (const auto* sf = std::get_if<StateFeedback>(&control)) {
        Acl = model.A - sf->F * sf->K;
    } else if (const auto* cf = std::get_if<CurrentFeedback>(&control)) {
        Acl = model.A - std::sqrt(2.0) * cf->F * cf->M * model.B.transpose();
        const RealMatrix G = L / std::sqrt(2.0) + cf->F * cf->M;
        source = 2.0 * G * G.transpose();
    }
    out.closed_loop = hurwitz(Acl);
    if (!out.closed_loop.stable()) {
        throw StabilityError("closed_loop_unconditional: closed-loop drift is not Hurwitz (max Re " +
                             std::to_string(out.closed_loop.max_real_part) + ")");
    }
    out.Sigma = lyapunov_solve(Acl, source);
    out.sigma_unc = out.sigma_c + out.Sigma;
    out.mean_decays = true;
    return out;
}

GaussianModel opo_model(double chi, double kappa, double eta) {
    if (!(kappa > 0.0)) throw ModelError("opo_model: kappa must be > 0");
    if (!(eta >= 0.0 && eta <= 1.0)) throw ModelError("efficiency out of [0,1]");
    GaussianModel m;
    m.n_modes = 1;
    m.A = RealMatrix::Zero(2, 2);
    m.A(0, 0) = -(chi + 0.5 * kappa);
    m.A(1, 1) = chi - 0.5 * kappa;
    m.D = kappa * RealMatrix::Identity(2, 2);
    m.B = RealMatrix::Zero(2, 2);
    m.B(0, 0) = -std::sqrt(eta * kappa);
    m.E = m.B;
    return m;
}

OpoReference opo_reference(double chi, double kappa, double lambda, double q) {
    if (!(kappa > 0.0)) throw ModelError("opo_reference: kappa must be > 0");
    if (!(std::abs(chi) < 0.5 * kappa)) throw ModelError("opo_reference: requires |chi| < kappa/2");
    if (!(q > 0.0)) throw ModelError("opo_reference: requires q > 0");
    if (lambda == 0.0) throw ModelError("opo_reference: requires lambda != 0");
    OpoReference r;
    r.sigma_unc = RealMatrix::Zero(2, 2);
    r.sigma_unc(0, 0) = kappa / (kappa + 2.0 * chi);
    r.sigma_unc(1, 1) = kappa / (kappa - 2.0 * chi);
    r.sigma_c = RealMatrix::Zero(2, 2);
    r.sigma_c(0, 0) = (kappa - 2.0 * chi) / kappa;
    r.sigma_c(1, 1) = kappa / (kappa - 2.0 * chi);
    r.M_opt_11 = (chi / lambda) * std::sqrt(2.0 / kappa);
    const double s = kappa + 2.0 * chi;
    r.f_A = 4.0 * q * chi * chi / (kappa * std::sqrt(q * (4.0 * lambda * lambda + q * s * s)));
    r.f_B = 8.0 * q * chi * chi / (q * s + std::sqrt(q * (8.0 + q * s * s)));
    return r;
}

}  // namespace qmon
