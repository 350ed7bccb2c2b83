#include "doctest.h"
#include "helpers.hpp"

#include <Eigen/Eigenvalues>

#include "qmon/gaussian.hpp"

using qmon::RealMatrix;
using qmon::RealVector;
using namespace qmon;

namespace {

RealMatrix diag(double a, double b) {
    RealMatrix m = RealMatrix::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// A X + X A^T + Q = 0 through the vectorized system (I (x) A + A (x) I) vec X = -vec Q.
RealMatrix kron_lyap(const RealMatrix& A, const RealMatrix& Q) {
    const Eigen::Index n = A.rows();
    RealMatrix L = RealMatrix::Zero(n * n, n * n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index k = 0; k < n; ++k) {
                L(i + j * n, k + j * n) += A(i, k);
                L(i + j * n, i + k * n) += A(j, k);
            }
    const RealVector q = Eigen::Map<const RealVector>(Q.data(), n * n);
    const RealVector x = L.fullPivLu().solve(-q);
    return Eigen::Map<const RealMatrix>(x.data(), n, n);
}

// Stabilizing CARE root from the stable invariant subspace of the Hamiltonian matrix.
RealMatrix hamiltonian_care(const RealMatrix& A, const RealMatrix& P, const RealMatrix& S) {
    const Eigen::Index n = A.rows();
    RealMatrix H(2 * n, 2 * n);
    H << A, -S, -P, -A.transpose();
    Eigen::EigenSolver<RealMatrix> es(H);
    Eigen::MatrixXcd V(2 * n, n);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < 2 * n; ++i) {
        if (es.eigenvalues()(i).real() < 0.0) V.col(k++) = es.eigenvectors().col(i);
    }
    REQUIRE(k == n);
    const Eigen::MatrixXcd Y = V.bottomRows(n) * V.topRows(n).inverse();
    return Y.real();
}

// LQG excess noise for the OPO, computed without the library solvers.
double oracle_excess_11(double chi, double kappa, const RealMatrix& F, double q) {
    const RealMatrix A = diag(-(chi + kappa / 2), chi - kappa / 2);
    const RealMatrix P = diag(1.0, 0.0);
    const RealMatrix Qi = RealMatrix::Identity(F.cols(), F.cols()) / q;
    const RealMatrix Y = hamiltonian_care(A.transpose(), P, F * Qi * F.transpose());
    const RealMatrix K = Qi * F.transpose() * Y;
    // E - sigma_c B has one nonzero entry, -sqrt(kappa) + (kappa - 2chi)/sqrt(kappa)
    RealMatrix G = RealMatrix::Zero(2, 1);
    G(0, 0) = -std::sqrt(kappa) + (kappa - 2 * chi) / std::sqrt(kappa);
    return kron_lyap(A - F * K, G * G.transpose())(0, 0);
}

RealMatrix Fb() {
    RealMatrix F(2, 2);
    F << 1, 1, 0, 0;
    return F;
}

}  // namespace

TEST_CASE("Lyapunov examples") {
    CHECK(qt::sup(lyapunov_solve(-RealMatrix::Identity(2, 2), RealMatrix::Identity(2, 2)) -
                  0.5 * RealMatrix::Identity(2, 2)) < 1e-14);
    CHECK(qt::sup(lyapunov_solve(diag(-1, -2), diag(2, 4)) - RealMatrix::Identity(2, 2)) < 1e-14);
    CHECK_THROWS_AS(lyapunov_solve(diag(-1, 0.5), diag(1, 1)), StabilityError);
    CHECK_THROWS_AS(lyapunov_solve(diag(-1, 0.0), diag(1, 1)), StabilityError);
}

TEST_CASE("random stable Lyapunov problems") {
    std::mt19937_64 g(41);
    std::normal_distribution<double> n;
    for (int trial = 0; trial < 10; ++trial) {
        RealMatrix A(4, 4), C(4, 4);
        for (int i = 0; i < 16; ++i) {
            A.data()[i] = n(g);
            C.data()[i] = n(g);
        }
        Eigen::EigenSolver<RealMatrix> es(A);
        A -= (es.eigenvalues().real().maxCoeff() + 0.5) * RealMatrix::Identity(4, 4);
        const RealMatrix Q = C * C.transpose();
        const RealMatrix X = lyapunov_solve(A, Q);
        CHECK(qt::sup(A * X + X * A.transpose() + Q) <= 1e-10);
        CHECK(qt::sup(X - X.transpose()) == 0.0);
        CHECK(qt::sup(X - kron_lyap(A, Q)) <= 1e-10 * (1.0 + qt::sup(X)));
    }
}

TEST_CASE("Hurwitz classification") {
    CHECK(hurwitz(diag(-0.7, -0.3)).status == Stability::stable);
    CHECK(hurwitz(diag(-0.7, 0.0)).status == Stability::marginal);
    CHECK(hurwitz(diag(-0.7, 1e-11)).status == Stability::marginal);
    CHECK(hurwitz(diag(-0.7, 0.1)).status == Stability::unstable);
    CHECK_FALSE(hurwitz(diag(-0.7, 0.0)).stable());
}

TEST_CASE("OPO model matrices") {
    const GaussianModel m = opo_model(0.2, 1.0, 1.0);
    CHECK(qt::sup(m.A - diag(-0.7, -0.3)) < 1e-15);
    CHECK(qt::sup(m.D - RealMatrix::Identity(2, 2)) == 0.0);
    CHECK(m.B(0, 0) == -1.0);
    CHECK(m.B(1, 0) == 0.0);
    CHECK(qt::sup(m.E - m.B) == 0.0);
    CHECK(opo_model(0.2, 1.0, 0.25).B(0, 0) == doctest::Approx(-0.5));
    CHECK(hurwitz(m.A).stable());
    CHECK_FALSE(hurwitz(opo_model(0.6, 1.0, 1.0).A).stable());
    CHECK(hurwitz(opo_model(0.5, 1.0, 1.0).A).status == Stability::marginal);
    CHECK_THROWS_AS(opo_model(0.2, 1.0, 1.5), ModelError);
    CHECK_THROWS_AS(opo_model(0.2, 0.0, 1.0), ModelError);
}

TEST_CASE("OPO unconditional steady state") {
    const GaussianModel m = opo_model(0.2, 1.0, 1.0);
    const RealMatrix s = unconditional_steady_state(m);
    CHECK(qt::sup(s - diag(1.0 / 1.4, 1.0 / 0.6)) < 1e-12);
    const MomentRates z = unconditional_moment_rhs(m, {RealVector::Zero(2), s});
    CHECK(qt::sup(z.dsigma) < 1e-12);
    CHECK_THROWS_AS(unconditional_steady_state(opo_model(0.6, 1.0, 1.0)), StabilityError);
    CHECK_THROWS_AS(unconditional_steady_state(opo_model(0.5, 1.0, 1.0)), StabilityError);
    // sigma_pp grows without bound as chi -> kappa/2
    double prev = 0.0;
    for (double chi : {0.4, 0.45, 0.49, 0.499}) {
        const double pp = unconditional_steady_state(opo_model(chi, 1.0, 1.0))(1, 1);
        CHECK(pp > prev);
        prev = pp;
    }
    CHECK(prev > 100.0);
}

TEST_CASE("unconditional moment equations") {
    GaussianModel m;
    m.n_modes = 1;
    m.A = RealMatrix::Zero(2, 2);
    m.D = RealMatrix::Zero(2, 2);
    m.B = RealMatrix::Zero(2, 1);
    m.E = RealMatrix::Zero(2, 1);
    RealVector r(2);
    r << 0.3, -1.0;
    const MomentRates z = unconditional_moment_rhs(m, {r, RealMatrix::Identity(2, 2)});
    CHECK(z.dr.norm() == 0.0);
    CHECK(qt::sup(z.dsigma) == 0.0);
    CHECK_THROWS_AS(unconditional_moment_rhs(m, {RealVector::Zero(3), RealMatrix::Identity(2, 2)}), DimensionError);
}

TEST_CASE("conditional OPO steady state") {
    const GaussianModel m = opo_model(0.2, 1.0, 1.0);
    const RealMatrix sc = riccati_steady_state(m);
    CHECK(qt::sup(sc - diag(0.6, 1.0 / 0.6)) < 1e-8);
    CHECK(qt::sup(riccati_rhs(m, sc)) <= 1e-10);
    CHECK(is_physical_covariance(sc));

    // the closed-form point is an exact zero of the Riccati flow
    CHECK(qt::sup(riccati_rhs(m, diag(0.6, 1.0 / 0.6))) < 1e-14);

    CHECK(qt::sup(riccati_steady_state(opo_model(0.0, 1.0, 1.0)) - RealMatrix::Identity(2, 2)) < 1e-8);
    const GaussianModel blind = opo_model(0.2, 1.0, 0.0);
    CHECK(qt::sup(riccati_steady_state(blind) - unconditional_steady_state(blind)) < 1e-10);

    // squeezing of q improves without limit as chi -> kappa/2
    CHECK(riccati_steady_state(opo_model(0.499, 1.0, 1.0))(0, 0) == doctest::Approx(0.002).epsilon(1e-6));
    CHECK(opo_reference(0.4999, 1.0, 1.0, 1.0).sigma_c(0, 0) == doctest::Approx(2e-4).epsilon(1e-6));
}

TEST_CASE("conditional step") {
    const GaussianModel m = opo_model(0.2, 1.0, 1.0);
    const RealMatrix sc = diag(0.6, 1.0 / 0.6);
    // B = E = diag(-1, 0): the second output carries no signal
    RealVector r(2), dw(2);
    r << 0.4, -0.2;
    dw << 0.0, 0.0;
    const ConditionalOutcome o = conditional_step({r, sc}, m, 1e-2, dw);
    CHECK(qt::sup(o.state.sigma - sc) < 1e-14);
    // E[dy] = sqrt(2 eta kappa) q dt
    CHECK(o.dy(0) == doctest::Approx(std::sqrt(2.0) * 0.4 * 1e-2).epsilon(1e-14));
    CHECK(o.state.r(0) == doctest::Approx(0.4 - 0.7 * 0.4 * 1e-2));

    dw << 0.1, 0.05;
    const ConditionalOutcome o2 = conditional_step({r, sc}, m, 1e-2, dw);
    // E - sigma_c B = (-1 + 0.6, 0)
    CHECK(o2.state.r(0) == doctest::Approx(0.4 - 0.7 * 0.4 * 1e-2 - 0.4 * 0.1 / std::sqrt(2.0)));
    CHECK(o2.state.r(1) == doctest::Approx(-0.2 + 0.3 * 0.2 * 1e-2));

    GaussianModel u = m;
    u.B.setZero();
    u.E.setZero();
    const RealMatrix s0 = RealMatrix::Identity(2, 2);
    const ConditionalOutcome o3 = conditional_step({r, s0}, u, 1e-3, dw);
    CHECK(o3.dy(0) == 0.1);
    CHECK(o3.dy(1) == 0.05);
    CHECK((o3.state.r - (r + 1e-3 * u.A * r)).norm() < 1e-15);
    const RealMatrix rhs = u.A * s0 + s0 * u.A.transpose() + u.D;
    const RealMatrix rhs2 = u.A * rhs + rhs * u.A.transpose();
    CHECK(qt::sup(o3.state.sigma - s0 - 1e-3 * rhs - 0.5e-6 * rhs2) < 1e-9);
    CHECK(qt::sup(o3.state.sigma - o3.state.sigma.transpose()) == 0.0);

    CHECK_THROWS_AS(conditional_step({r, sc}, m, 1e-3, RealVector::Zero(3)), DimensionError);
}

TEST_CASE("LQG gain") {
    SUBCASE("scalar problem") {
        const RealMatrix Y = care_solve(RealMatrix::Constant(1, 1, -1.0), RealMatrix::Constant(1, 1, 1.0),
                                        RealMatrix::Constant(1, 1, 1.0));
        CHECK(Y(0, 0) == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-12));

        GaussianModel m;
        m.n_modes = 1;
        m.A = -RealMatrix::Identity(2, 2);
        m.D = RealMatrix::Identity(2, 2);
        m.B = RealMatrix::Zero(2, 1);
        m.E = RealMatrix::Zero(2, 1);
        const LqgGain g = lqg_gain(m, RealMatrix::Identity(2, 2), diag(1, 0), RealMatrix::Identity(2, 2));
        CHECK(g.K(0, 0) == doctest::Approx(0.4142136).epsilon(1e-7));
        CHECK(std::abs(g.K(1, 1)) < 1e-12);
        CHECK(g.closed_loop.stable());
        CHECK(g.closed_loop.max_real_part == doctest::Approx(-1.0));
        // the controlled direction closes at -sqrt2
        const Eigen::VectorXd ev = (m.A - g.K).diagonal();
        CHECK(ev.minCoeff() == doctest::Approx(-std::sqrt(2.0)));
    }

    SUBCASE("nothing to minimize") {
        const GaussianModel m = opo_model(0.2, 1.0, 1.0);
        const LqgGain g = lqg_gain(m, RealMatrix::Identity(2, 2), RealMatrix::Zero(2, 2), RealMatrix::Identity(2, 2));
        CHECK(qt::sup(g.Y) < 1e-12);
        CHECK(qt::sup(g.K) < 1e-12);
    }

    SUBCASE("displacing only p is useless") {
        const GaussianModel m = opo_model(0.2, 1.0, 1.0);
        const LqgGain g = lqg_gain(m, diag(0, 1), diag(1, 0), RealMatrix::Identity(2, 2));
        CHECK(qt::sup(g.K) < 1e-12);
    }

    SUBCASE("residual and flags are consistent") {
        const GaussianModel m = opo_model(0.2, 1.0, 1.0);
        for (double q : {1e-3, 0.1, 1.0, 10.0}) {
            const RealMatrix Q = q * RealMatrix::Identity(2, 2);
            const LqgGain g = lqg_gain(m, RealMatrix::Identity(2, 2), diag(1, 0), Q);
            const RealMatrix res = m.A.transpose() * g.Y + g.Y * m.A + diag(1, 0) - g.Y * Q.inverse() * g.Y;
            CHECK(qt::sup(res) <= 1e-10);
            const HurwitzReport h = hurwitz(m.A - g.K);
            CHECK(h.status == g.closed_loop.status);
            CHECK(h.max_real_part == doctest::Approx(g.closed_loop.max_real_part));
        }
    }

    SUBCASE("rejections") {
        const GaussianModel m = opo_model(0.2, 1.0, 1.0);
        CHECK_THROWS_AS(lqg_gain(m, RealMatrix::Identity(2, 2), diag(1, 0), diag(1, 0)), ModelError);
        CHECK_THROWS_AS(lqg_gain(m, RealMatrix::Identity(2, 2), diag(-1, 0), RealMatrix::Identity(2, 2)), ModelError);
    }
}

TEST_CASE("OPO closed forms") {
    const OpoReference r = opo_reference(0.2, 1.0, 1.0, 1.0);
    CHECK(r.f_A == doctest::Approx(0.16 / std::sqrt(5.96)).epsilon(1e-12));
    CHECK(r.f_A == doctest::Approx(0.0655386).epsilon(1e-6));
    CHECK(r.f_B == doctest::Approx(0.32 / (1.4 + std::sqrt(9.96))).epsilon(1e-12));
    CHECK(r.f_B == doctest::Approx(0.0702378).epsilon(1e-6));
    CHECK(r.f_B >= r.f_A);
    CHECK(r.M_opt_11 == doctest::Approx(0.2828427).epsilon(1e-7));
    CHECK(opo_reference(0.2, 1.0, 1.0, 1e-12).f_A < 1e-6);
    CHECK(opo_reference(0.2, 1.0, 1.0, 1e-12).f_B < 1e-6);
    CHECK_THROWS_AS(opo_reference(0.5, 1.0, 1.0, 1.0), ModelError);
    CHECK_THROWS_AS(opo_reference(0.2, 1.0, 0.0, 1.0), ModelError);
    CHECK_THROWS_AS(opo_reference(0.2, 1.0, 1.0, 0.0), ModelError);
}

TEST_CASE("excess noise under LQG control") {
    const GaussianModel m = opo_model(0.2, 1.0, 1.0);
    const RealMatrix P = diag(1, 0), Q = RealMatrix::Identity(2, 2);

    const LqgGain ga = lqg_gain(m, RealMatrix::Identity(2, 2), P, Q);
    const RealMatrix Sa = excess_noise_ss(m, RealMatrix::Identity(2, 2), ga.K);
    CHECK(Sa(0, 0) == doctest::Approx(0.0655386).epsilon(1e-6));
    CHECK(qt::sup(Sa - Sa.transpose()) < 1e-14);
    CHECK(Eigen::SelfAdjointEigenSolver<RealMatrix>(Sa).eigenvalues().minCoeff() >= -1e-12);

    // conjugate-quadrature displacement
    const LqgGain gb = lqg_gain(m, Fb(), P, Q);
    const RealMatrix Sb = excess_noise_ss(m, Fb(), gb.K);
    CHECK(Sb(0, 0) == doctest::Approx(oracle_excess_11(0.2, 1.0, Fb(), 1.0)).epsilon(1e-8));
    CHECK(Sb(0, 0) == doctest::Approx(0.0506979).epsilon(1e-5));

    CHECK_THROWS_AS(excess_noise_ss(opo_model(0.6, 1.0, 1.0), RealMatrix::Identity(2, 2), RealMatrix::Zero(2, 2)),
                    std::exception);
}

TEST_CASE("excess noise vanishes as control gets cheap") {
    const GaussianModel m = opo_model(0.2, 1.0, 1.0);
    double prev = 1.0;
    for (int e = 2; e <= 8; ++e) {
        const RealMatrix Q = std::pow(10.0, -e) * RealMatrix::Identity(2, 2);
        const LqgGain g = lqg_gain(m, RealMatrix::Identity(2, 2), diag(1, 0), Q);
        const double s = excess_noise_ss(m, RealMatrix::Identity(2, 2), g.K)(0, 0);
        CHECK(s < prev);
        prev = s;
    }
    CHECK(prev < 1e-4);
}

TEST_CASE("optimal Markovian gain") {
    const GaussianModel m = opo_model(0.2, 1.0, 1.0);
    const MarkovianGain g = markovian_gain(m, RealMatrix::Identity(2, 2));
    CHECK(g.M(0, 0) == doctest::Approx(0.2 * std::sqrt(2.0)).epsilon(1e-10));
    CHECK(std::abs(g.M(1, 0)) < 1e-14);
    CHECK(g.closed_loop.stable());
    const RealMatrix sc = riccati_steady_state(m);
    CHECK(qt::sup(m.E - sc * m.B + std::sqrt(2.0) * g.M) <= 1e-10);

    const MarkovianGain h = markovian_gain(m, diag(2, 0));
    CHECK(h.M(0, 0) == doctest::Approx(0.1 * std::sqrt(2.0)).epsilon(1e-10));

    try {
        markovian_gain(m, diag(0, 1));
        FAIL("expected an unreachable-direction error");
    } catch (const ModelError& e) {
        CHECK(std::string(e.what()).find("q1") != std::string::npos);
    }
}

TEST_CASE("closed-loop unconditional steady states") {
    const GaussianModel m = opo_model(0.2, 1.0, 1.0);
    const RealMatrix sc = diag(0.6, 1.0 / 0.6);

    const ClosedLoopSteadyState open = closed_loop_unconditional(m, NoControl{});
    CHECK(qt::sup(open.sigma_c - sc) < 1e-8);
    CHECK(qt::sup(open.sigma_unc - diag(1.0 / 1.4, 1.0 / 0.6)) < 1e-8);
    CHECK(qt::sup(open.sigma_c + open.Sigma - open.sigma_unc) < 1e-12);
    CHECK(open.mean_decays);

    const MarkovianGain g = markovian_gain(m, RealMatrix::Identity(2, 2));
    const ClosedLoopSteadyState mk = closed_loop_unconditional(m, CurrentFeedback{RealMatrix::Identity(2, 2), g.M});
    CHECK(qt::sup(mk.sigma_unc - sc) < 1e-8);
    CHECK(qt::sup(mk.Sigma) < 1e-10);

    const LqgGain l = lqg_gain(m, RealMatrix::Identity(2, 2), diag(1, 0), RealMatrix::Identity(2, 2));
    const ClosedLoopSteadyState lq = closed_loop_unconditional(m, StateFeedback{RealMatrix::Identity(2, 2), l.K});
    CHECK(lq.Sigma(0, 0) == doctest::Approx(0.0655386).epsilon(1e-6));
    CHECK(qt::sup(lq.sigma_c + lq.Sigma - lq.sigma_unc) < 1e-12);

    CHECK_THROWS_AS(closed_loop_unconditional(opo_model(0.6, 1.0, 1.0), NoControl{}), std::exception);
}

TEST_CASE("solvers match the OPO closed forms across parameters") {
    for (int i = 1; i <= 10; ++i) {
        const double chi = 0.045 * i;
        const GaussianModel m = opo_model(chi, 1.0, 1.0);
        const RealMatrix sc = riccati_steady_state(m);
        const MarkovianGain mg = markovian_gain(m, RealMatrix::Identity(2, 2));
        for (int j = 0; j < 10; ++j) {
            const double q = 1e-4 * std::pow(1e5, j / 9.0);
            const OpoReference ref = opo_reference(chi, 1.0, 1.0, q);
            CHECK(rel(sc(0, 0), ref.sigma_c(0, 0)) < 1e-6);
            CHECK(rel(sc(1, 1), ref.sigma_c(1, 1)) < 1e-6);
            CHECK(rel(mg.M(0, 0), ref.M_opt_11) < 1e-6);
            const RealMatrix Q = q * RealMatrix::Identity(2, 2);
            const LqgGain ga = lqg_gain(m, RealMatrix::Identity(2, 2), diag(1, 0), Q);
            CHECK(rel(excess_noise_ss(m, RealMatrix::Identity(2, 2), ga.K)(0, 0), ref.f_A) < 1e-6);
            const LqgGain gb = lqg_gain(m, Fb(), diag(1, 0), Q);
            CHECK(rel(excess_noise_ss(m, Fb(), gb.K)(0, 0), oracle_excess_11(chi, 1.0, Fb(), q)) < 1e-6);
        }
    }
}

TEST_CASE("physicality of covariances") {
    CHECK(is_physical_covariance(RealMatrix::Identity(2, 2)));
    CHECK(is_physical_covariance(diag(0.5, 2.0)));
    CHECK_FALSE(is_physical_covariance(diag(0.5, 0.5)));
    CHECK(phase_space_label(0) == "q1");
    CHECK(phase_space_label(3) == "p2");
    const RealMatrix O = symplectic_form(2);
    CHECK(O(0, 1) == 1.0);
    CHECK(O(1, 0) == -1.0);
    CHECK(O(2, 3) == 1.0);
    CHECK(O(0, 3) == 0.0);
}

TEST_CASE("model validation") {
    GaussianModel m = opo_model(0.2, 1.0, 1.0);
    m.D(0, 1) = 0.5;
    CHECK_THROWS_AS(m.validate(), ModelError);
    m = opo_model(0.2, 1.0, 1.0);
    m.D = diag(1, -1);
    CHECK_THROWS_AS(m.validate(), ModelError);
    m = opo_model(0.2, 1.0, 1.0);
    m.B = RealMatrix::Zero(2, 3);
    CHECK_THROWS_AS(m.validate(), DimensionError);
}
