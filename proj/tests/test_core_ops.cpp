#include "doctest.h"
#include "helpers.hpp"

using namespace qt;

TEST_CASE("dissipator on the excited and dark states") {
    const Operator sm = op("sm");
    CHECK(sup(dissipator(sm, excited()) - diag2(-1, 1)) < 1e-15);
    CHECK(sup(dissipator(sm, ground())) == 0.0);
}

TEST_CASE("dissipator is invariant under a phase of the jump operator") {
    std::mt19937_64 g(1);
    const Operator a = random_operator(3, g);
    const DensityMatrix rho = random_state(3, g);
    for (double th : {0.0, M_PI / 4, M_PI / 2, 0.7, 1.3}) {
        CHECK(sup(dissipator(std::polar(1.0, th) * a, rho) - dissipator(a, rho)) < 1e-13);
    }
}

TEST_CASE("dissipator output is traceless and Hermitian") {
    std::mt19937_64 g(2);
    for (int k = 0; k < 20; ++k) {
        const Operator a = random_operator(4, g);
        const DensityMatrix rho = random_state(4, g);
        const Operator d = dissipator(a, rho);
        CHECK(std::abs(d.trace()) < 1e-12);
        CHECK(sup(d - d.adjoint()) < 1e-12);
    }
}

TEST_CASE("measurement superoperator values") {
    const Operator sm = op("sm");
    Operator sx(2, 2);
    sx << 0, 1, 1, 0;
    CHECK(sup(measurement_superop(sm, excited()) - sx) < 1e-15);
    CHECK(sup(measurement_superop(sm, 0.5 * Operator::Identity(2, 2)) - 0.5 * sx) < 1e-15);
    CHECK(sup(measurement_superop(Operator::Zero(2, 2), excited())) == 0.0);
}

TEST_CASE("measurement superoperator is traceless and nonlinear") {
    std::mt19937_64 g(3);
    const Operator a = random_operator(3, g);
    const DensityMatrix rho = random_state(3, g);
    CHECK(std::abs(measurement_superop(a, rho).trace()) < 1e-12);
    // the <A + A^dag> term makes it nonlinear; 2 rho is not normalized so evaluate by hand
    const Operator lin = a * rho + rho * a.adjoint();
    const cplx x = ((a + a.adjoint()) * rho).trace();
    const Operator doubled = 2.0 * lin - (2.0 * x) * (2.0 * rho);
    CHECK(sup(doubled - 2.0 * measurement_superop(a, rho)) > 1e-3);
}

TEST_CASE("measurement superoperator rejects unnormalized states") {
    CHECK_THROWS_AS(measurement_superop(op("sm"), diag2(1.1, 0)), std::invalid_argument);
    CHECK_THROWS_AS(measurement_superop(op("sm"), basis_state(3, 0)), DimensionError);
}

TEST_CASE("expectation values") {
    CHECK(expectation(excited(), op("sz")) == cplx(1.0));
    CHECK(std::abs(expectation(DensityMatrix(0.5 * Operator::Identity(2, 2)), op("sx"))) < 1e-15);
    CHECK(expectation(excited(), Operator(op("sp") * op("sm"))) == cplx(1.0));
    StateVector e(2);
    e << 1, 0;
    CHECK(expectation(e, op("sz")) == cplx(1.0));
    CHECK_THROWS_AS(expectation(excited(), Operator::Identity(3, 3)), DimensionError);
}

TEST_CASE("standard qubit and boson operators") {
    Operator sm(2, 2);
    sm << 0, 0, 1, 0;
    CHECK(sup(op("sm") - sm) == 0.0);

    const auto b3 = build_standard_ops(SystemKind::boson, 3);
    CHECK(b3.at("a")(0, 1) == cplx(1.0));
    CHECK(std::abs(b3.at("a")(1, 2) - std::sqrt(2.0)) < 1e-15);
    CHECK_THROWS_AS(build_standard_ops(SystemKind::boson, 1), DimensionError);
}

TEST_CASE("truncated [q, p] = i away from the last level") {
    const auto b = build_standard_ops(SystemKind::boson, 8);
    // independent oracle: q p - p q from explicit ladder entries
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(8, 8);
    for (int n = 1; n < 8; ++n) a(n - 1, n) = std::sqrt(double(n));
    const Eigen::MatrixXcd q = (a + a.adjoint()) / std::sqrt(2.0);
    const Eigen::MatrixXcd p = cplx(0, -1) * (a - a.adjoint()) / std::sqrt(2.0);
    CHECK(sup(b.at("q") - q) < 1e-15);
    CHECK(sup(b.at("p") - p) < 1e-15);
    const Operator c = commutator(b.at("q"), b.at("p"));
    for (int i = 0; i < 7; ++i) CHECK(std::abs(c(i, i) - cplx(0, 1)) < 1e-12);
    CHECK(std::abs(c(7, 7) - cplx(0, 1)) > 1.0);
}

TEST_CASE("number operator spectrum") {
    for (int dim : {2, 5, 9}) {
        const auto b = build_standard_ops(SystemKind::boson, dim);
        Eigen::SelfAdjointEigenSolver<Operator> es(b.at("n"));
        for (int k = 0; k < dim; ++k) CHECK(std::abs(es.eigenvalues()(k) - k) < 1e-12);
    }
}

TEST_CASE("state diagnostics") {
    const StateDiagnostics d0 = validate_state(excited());
    CHECK(d0.hermiticity_defect == 0.0);
    CHECK(d0.trace_defect == 0.0);
    CHECK(d0.min_eigenvalue == doctest::Approx(0.0));
    CHECK(d0.valid());

    CHECK(validate_state(diag2(1.1, 0)).trace_defect == doctest::Approx(0.1));
    CHECK_FALSE(validate_state(diag2(1.1, 0)).valid());

    DensityMatrix bad(2, 2);
    bad << 0.5, 0.6, 0.6, 0.5;
    const StateDiagnostics d = validate_state(bad);
    CHECK(d.min_eigenvalue == doctest::Approx(-0.1));
    CHECK_FALSE(d.valid());
}

TEST_CASE("truncation leak guard") {
    DensityMatrix rho = DensityMatrix::Zero(4, 4);
    rho(0, 0) = 1.0 - 1e-7;
    rho(3, 3) = 1e-7;
    CHECK_FALSE(truncation_leak(rho));
    rho(0, 0) = 1.0 - 1e-5;
    rho(3, 3) = 1e-5;
    CHECK(truncation_leak(rho));
}
