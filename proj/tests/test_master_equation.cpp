#include "doctest.h"
#include "helpers.hpp"

#include <Eigen/Eigenvalues>

using namespace qt;

TEST_CASE("Lindblad rhs on simple inputs") {
    CHECK(sup(liouvillian_apply(qubit_decay(), excited()) - diag2(-1, 1)) < 1e-15);

    OpenSystemModel m;
    m.H = op("sz");
    CHECK(sup(liouvillian_apply(m, excited())) == 0.0);

    m.H = op("sx");
    Operator expect(2, 2);
    expect << 0, cplx(0, 1), cplx(0, -1), 0;
    CHECK(sup(liouvillian_apply(m, excited()) - expect) < 1e-15);
}

TEST_CASE("model validation") {
    OpenSystemModel m = qubit_decay();
    m.H = op("sm");
    CHECK_THROWS_AS(m.validate(), ModelError);
    m = qubit_decay(-1.0);
    CHECK_THROWS_AS(m.validate(), ModelError);
    m = qubit_decay(1.0, 1.2);
    CHECK_THROWS_WITH_AS(m.validate(), "efficiency out of [0,1]", ModelError);
    m = qubit_decay();
    m.bath.N = 1.0;
    m.bath.M = 2.0;
    CHECK_THROWS_AS(m.validate(), ModelError);
}

TEST_CASE("qubit decay reaches exp(-1) at t = 1") {
    const TimeGrid grid = TimeGrid::from_final(1e-3, 1.0);
    const auto rk = integrate_me(qubit_decay(), excited(), grid, MeStepper::rk4);
    const auto ex = integrate_me(qubit_decay(), excited(), grid, MeStepper::expm);
    CHECK(std::abs(rk.back()(0, 0).real() - std::exp(-1.0)) < 1e-6);
    CHECK(std::abs(ex.back()(0, 0).real() - std::exp(-1.0)) < 1e-6);
    CHECK(sup(rk.back() - ex.back()) < 1e-7);
    for (const auto& r : rk) {
        CHECK(std::abs(r.trace() - 1.0) < 1e-9);
        CHECK(min_eigenvalue(r) > -1e-9);
    }
}

TEST_CASE("no dynamics leaves the state fixed") {
    OpenSystemModel m;
    m.H = Operator::Zero(2, 2);
    std::mt19937_64 g(4);
    const DensityMatrix rho = random_state(2, g);
    const auto out = integrate_me(m, rho, TimeGrid::from_final(0.01, 1.0));
    CHECK(sup(out.back() - rho) == 0.0);
}

TEST_CASE("semigroup property of the propagator") {
    std::mt19937_64 g(5);
    OpenSystemModel m = qubit_decay(0.7, 1.0, random_hermitian(2, g));
    m.channels.push_back({0.3, op("sz")});
    const DensityMatrix rho = random_state(2, g);
    const DensityMatrix a = propagate(m, propagate(m, rho, 0.3), 0.5);
    CHECK(sup(a - propagate(m, rho, 0.8)) < 1e-8);
}

TEST_CASE("Liouvillian spectrum of qubit decay") {
    const Eigen::MatrixXcd L = liouvillian_matrix(qubit_decay());
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(L);
    std::vector<double> re;
    for (int i = 0; i < 4; ++i) {
        CHECK(std::abs(es.eigenvalues()(i).imag()) < 1e-12);
        re.push_back(es.eigenvalues()(i).real());
    }
    std::sort(re.begin(), re.end());
    CHECK(re[0] == doctest::Approx(-1.0));
    CHECK(re[1] == doctest::Approx(-0.5));
    CHECK(re[2] == doctest::Approx(-0.5));
    CHECK(std::abs(re[3]) < 1e-12);

    // trace preservation: vec(I)^dag L = 0
    const Eigen::VectorXcd vi = vec(DensityMatrix::Identity(2, 2));
    CHECK((vi.adjoint() * L).cwiseAbs().maxCoeff() < 1e-14);

    OpenSystemModel zero;
    zero.H = Operator::Zero(3, 3);
    CHECK(sup(liouvillian_matrix(zero)) == 0.0);
}

TEST_CASE("superoperator matches the rhs on random inputs") {
    std::mt19937_64 g(6);
    OpenSystemModel m = qubit_decay(0.9, 1.0, random_hermitian(3, g));
    m.channels = {{0.9, random_operator(3, g)}, {0.4, random_operator(3, g)}};
    const DensityMatrix rho = random_state(3, g);
    const Eigen::VectorXcd lv = liouvillian_matrix(m) * vec(rho);
    CHECK(sup(unvec(lv, 3) - lindblad_rhs(m, rho)) < 1e-12);

    OpenSystemModel gb = qubit_decay();
    gb.bath = {0.7, cplx(0.3, 0.4), cplx(0.2, -0.1)};
    const DensityMatrix r2 = random_state(2, g);
    CHECK(sup(unvec(liouvillian_matrix(gb) * vec(r2), 2) - generalized_bath_me_rhs(gb, r2)) < 1e-12);
}

TEST_CASE("superoperator size limit") {
    OpenSystemModel m;
    m.H = Operator::Zero(kMaxSuperoperatorDim + 1, kMaxSuperoperatorDim + 1);
    CHECK_THROWS_AS(liouvillian_matrix(m), DimensionError);
}

TEST_CASE("rhs is Hermitian and traceless for random models") {
    std::mt19937_64 g(7);
    for (int k = 0; k < 10; ++k) {
        OpenSystemModel m = qubit_decay(1.3, 1.0, random_hermitian(4, g));
        m.channels = {{1.3, random_operator(4, g)}, {0.2, random_operator(4, g)}};
        if (k % 2) m.bath = {0.5, cplx(0.2, 0.1), cplx(0.1, 0.3)};
        const DensityMatrix rho = random_state(4, g);
        const Operator r = lindblad_rhs(m, rho);
        CHECK(std::abs(r.trace()) < 1e-12);
        CHECK(sup(r - r.adjoint()) < 1e-12);
    }
}

TEST_CASE("generalized bath rhs") {
    OpenSystemModel m = qubit_decay();
    std::mt19937_64 g(8);
    const DensityMatrix rho = random_state(2, g);
    CHECK(sup(generalized_bath_me_rhs(m, rho) - liouvillian_apply(m, rho)) < 1e-15);

    m.bath.N = 1.0;
    CHECK(sup(generalized_bath_me_rhs(m, excited()) - diag2(-2, 2)) < 1e-15);
    CHECK(sup(generalized_bath_me_rhs(m, diag2(1.0 / 3.0, 2.0 / 3.0))) < 1e-12);
    CHECK(sup(steady_state(m) - diag2(1.0 / 3.0, 2.0 / 3.0)) < 1e-8);
}

TEST_CASE("thermal steady state obeys detailed balance") {
    for (double N : {0.1, 0.5, 2.0, 7.0}) {
        OpenSystemModel m = qubit_decay(0.8);
        m.bath.N = N;
        const DensityMatrix ss = steady_state(m);
        CHECK(ss(1, 1).real() / ss(0, 0).real() == doctest::Approx((N + 1.0) / N).epsilon(1e-10));
        CHECK(std::abs(ss(0, 1)) < 1e-12);
    }
}

TEST_CASE("coherent drive Hamiltonian") {
    Operator sy(2, 2);
    sy << 0, cplx(0, -1), cplx(0, 1), 0;
    CHECK(sup(coherent_drive_hamiltonian(op("sm"), 1.0, 1.0) - sy) < 1e-15);
    CHECK(sup(coherent_drive_hamiltonian(op("sm"), 1.0, 0.0)) == 0.0);
    const Operator h = coherent_drive_hamiltonian(op("sm"), 2.0, cplx(0.3, 0.4));
    CHECK(sup(h - h.adjoint()) < 1e-15);
}

TEST_CASE("piecewise-constant Hamiltonian schedule") {
    OpenSystemModel m = qubit_decay(0.5);
    HamiltonianSchedule sched = {{0.4, op("sx")}, {1.0, op("sz")}};
    const TimeGrid grid = TimeGrid::from_final(1e-3, 1.0);
    const auto out = integrate_me(m, sched, excited(), grid, MeStepper::expm);
    OpenSystemModel a = m, b = m;
    a.H = op("sx");
    b.H = op("sz");
    const DensityMatrix ref = propagate(b, propagate(a, excited(), 0.4), 0.6);
    CHECK(sup(out.back() - ref) < 1e-10);
}

TEST_CASE("oversized rk4 steps are rejected") {
    const OpenSystemModel m = qubit_decay(400.0);
    CHECK_THROWS_AS(integrate_me(m, excited(), TimeGrid::from_final(0.01, 1.0)), StepError);
}

TEST_CASE("time grid") {
    const TimeGrid g = TimeGrid::from_final(1e-3, 3.0);
    CHECK(g.steps == 3000);
    CHECK(g.t_final() == doctest::Approx(3.0));
    CHECK_THROWS(TimeGrid::from_final(0.3, 1.0));
    CHECK_THROWS(TimeGrid::from_final(-1.0, 1.0));
}
