#pragma once

#include <cmath>
#include <random>

#include "qmon/core_ops.hpp"
#include "qmon/master_equation.hpp"

namespace qt {

using namespace qmon;

template <class Derived>
double sup(const Eigen::MatrixBase<Derived>& a) {
    return a.size() == 0 ? 0.0 : static_cast<double>(a.cwiseAbs().maxCoeff());
}

inline Operator op(const char* name) { return build_standard_ops(SystemKind::qubit).at(name); }

inline DensityMatrix excited() { return basis_state(2, 0); }
inline DensityMatrix ground() { return basis_state(2, 1); }

inline DensityMatrix diag2(double a, double b) {
    DensityMatrix r = DensityMatrix::Zero(2, 2);
    r(0, 0) = a;
    r(1, 1) = b;
    return r;
}

/// Single-channel qubit model, c = sigma_minus.
inline OpenSystemModel qubit_decay(double kappa = 1.0, double eta = 1.0, Operator H = Operator::Zero(2, 2)) {
    OpenSystemModel m;
    m.H = std::move(H);
    m.channels = {{kappa, op("sm")}};
    m.eta = eta;
    return m;
}

inline DensityMatrix random_state(int dim, std::mt19937_64& g) {
    std::normal_distribution<double> n;
    Operator a(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) a(i, j) = cplx(n(g), n(g));
    DensityMatrix r = a * a.adjoint();
    return r / r.trace();
}

inline Operator random_hermitian(int dim, std::mt19937_64& g) {
    std::normal_distribution<double> n;
    Operator a(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) a(i, j) = cplx(n(g), n(g));
    return 0.5 * (a + a.adjoint());
}

inline Operator random_operator(int dim, std::mt19937_64& g) {
    std::normal_distribution<double> n;
    Operator a(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) a(i, j) = cplx(n(g), n(g));
    return a;
}

/// Matrix units |i><j|, a basis of the operator space.
inline std::vector<Operator> matrix_units(int dim) {
    std::vector<Operator> out;
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
            Operator e = Operator::Zero(dim, dim);
            e(i, j) = 1.0;
            out.push_back(e);
        }
    return out;
}

}  // namespace qt
