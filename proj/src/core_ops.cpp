#include "qmon/core_ops.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

namespace qmon {

void require_square(const Operator& a, const char* what) {
    if (a.rows() != a.cols() || a.rows() == 0) {
        throw DimensionError(std::string(what) + ": operator must be square and non-empty");
    }
}

void require_same_dim(const Operator& a, const Operator& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError(std::string(what) + ": dimension mismatch (" + std::to_string(a.rows()) +
                             " vs " + std::to_string(b.rows()) + ")");
    }
}

bool is_hermitian(const Operator& a, double tol) {
    if (a.rows() != a.cols()) return false;
    return (a - a.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

Operator commutator(const Operator& a, const Operator& b) {
    require_same_dim(a, b, "commutator");
    return a * b - b * a;
}

Operator anticommutator(const Operator& a, const Operator& b) {
    require_same_dim(a, b, "anticommutator");
    return a * b + b * a;
}

Operator dissipator(const Operator& a, const DensityMatrix& rho) {
    require_square(a, "dissipator");
    require_same_dim(a, rho, "dissipator");
    const Operator ada = a.adjoint() * a;
    return a * rho * a.adjoint() - 0.5 * (ada * rho + rho * ada);
}

Operator measurement_superop(const Operator& a, const DensityMatrix& rho, const Tolerances& tol) {
    require_square(a, "measurement_superop");
    require_same_dim(a, rho, "measurement_superop");
    const double tr = rho.trace().real();
    if (std::abs(tr - 1.0) > tol.trace) {
        throw ModelError("measurement_superop: state must have unit trace, got " + std::to_string(tr));
    }
    const Operator arho = a * rho;
    const Operator rhoad = rho * a.adjoint();
    const double mean = (arho.trace() + rhoad.trace()).real();
    return arho + rhoad - mean * rho;
}

cplx expectation(const DensityMatrix& rho, const Operator& a) {
    require_same_dim(rho, a, "expectation");
    // Tr[rho A] = sum_ij rho_ij A_ji
    return (rho.array() * a.transpose().array()).sum();
}

cplx expectation(const StateVector& psi, const Operator& a) {
    if (a.cols() != psi.size()) throw DimensionError("expectation: dimension mismatch");
    return psi.dot(a * psi);
}

OperatorSet build_standard_ops(SystemKind kind, int dim) {
    OperatorSet ops;
    if (kind == SystemKind::qubit) {
        Operator sm = Operator::Zero(2, 2);
        sm(1, 0) = 1.0;
        Operator sx(2, 2), sy(2, 2), sz(2, 2);
        sx << 0, 1, 1, 0;
        sy << 0, -kI, kI, 0;
        sz << 1, 0, 0, -1;
        ops["id"] = Operator::Identity(2, 2);
        ops["sm"] = sm;
        ops["sp"] = sm.adjoint();
        ops["sx"] = sx;
        ops["sy"] = sy;
        ops["sz"] = sz;
        return ops;
    }
    if (dim < 2) throw DimensionError("build_standard_ops: boson dimension must be >= 2");
    Operator a = Operator::Zero(dim, dim);
    for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    const Operator adag = a.adjoint();
    const double s = 1.0 / std::sqrt(2.0);
    ops["id"] = Operator::Identity(dim, dim);
    ops["a"] = a;
    ops["adag"] = adag;
    ops["n"] = adag * a;
    ops["q"] = s * (a + adag);
    ops["p"] = -kI * s * (a - adag);
    return ops;
}

double min_eigenvalue(const DensityMatrix& rho) {
    const Operator herm = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<Operator> es(herm, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

StateDiagnostics validate_state(const DensityMatrix& rho) {
    require_square(rho, "validate_state");
    StateDiagnostics d;
    d.hermiticity_defect = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    d.trace_defect = std::abs(rho.trace() - 1.0);
    d.min_eigenvalue = min_eigenvalue(rho);
    return d;
}

double top_level_population(const DensityMatrix& rho) {
    require_square(rho, "top_level_population");
    return rho(rho.rows() - 1, rho.cols() - 1).real();
}

bool truncation_leak(const DensityMatrix& rho, const Tolerances& tol) {
    return top_level_population(rho) > tol.truncation_leak;
}

DensityMatrix projector(const StateVector& psi) { return psi * psi.adjoint(); }

DensityMatrix basis_state(int dim, int index) {
    if (index < 0 || index >= dim) throw DimensionError("basis_state: index out of range");
    DensityMatrix rho = DensityMatrix::Zero(dim, dim);
    rho(index, index) = 1.0;
    return rho;
}

}  // namespace qmon
