#pragma once

#include <map>
#include <string>

#include "qmon/types.hpp"

namespace qmon {

// Qubit basis order is (|e>, |g>) everywhere: index 0 is the excited state, so
// sigma_minus = |g><e| = [[0,0],[1,0]].

Operator commutator(const Operator& a, const Operator& b);
Operator anticommutator(const Operator& a, const Operator& b);

/// D[A]rho = A rho A^dag - 1/2 {A^dag A, rho}.
Operator dissipator(const Operator& a, const DensityMatrix& rho);

/// H[A]rho = A rho + rho A^dag - Tr[(A + A^dag) rho] rho. Requires a unit-trace rho.
Operator measurement_superop(const Operator& a, const DensityMatrix& rho,
                             const Tolerances& tol = kDefaultTolerances);

/// Tr[rho A].
cplx expectation(const DensityMatrix& rho, const Operator& a);
cplx expectation(const StateVector& psi, const Operator& a);

enum class SystemKind { qubit, boson };

/// Named operator set. Qubit: id, sm, sp, sx, sy, sz. Boson: id, a, adag, n, q, p
/// with q = (a + a^dag)/sqrt2 and p = -i(a - a^dag)/sqrt2.
using OperatorSet = std::map<std::string, Operator>;

OperatorSet build_standard_ops(SystemKind kind, int dim = 2);

struct StateDiagnostics {
    double hermiticity_defect = 0.0;
    double trace_defect = 0.0;
    double min_eigenvalue = 0.0;

    bool hermitian(const Tolerances& tol = kDefaultTolerances) const {
        return hermiticity_defect <= tol.hermiticity;
    }
    bool normalized(const Tolerances& tol = kDefaultTolerances) const {
        return trace_defect <= tol.trace;
    }
    bool positive(const Tolerances& tol = kDefaultTolerances) const {
        return min_eigenvalue >= -tol.positivity;
    }
    bool valid(const Tolerances& tol = kDefaultTolerances) const {
        return hermitian(tol) && normalized(tol) && positive(tol);
    }
};

StateDiagnostics validate_state(const DensityMatrix& rho);

/// Smallest eigenvalue of the Hermitian part of rho.
double min_eigenvalue(const DensityMatrix& rho);

/// Population of the highest retained Fock level.
double top_level_population(const DensityMatrix& rho);
bool truncation_leak(const DensityMatrix& rho, const Tolerances& tol = kDefaultTolerances);

DensityMatrix projector(const StateVector& psi);
DensityMatrix basis_state(int dim, int index);

void require_square(const Operator& a, const char* what);
void require_same_dim(const Operator& a, const Operator& b, const char* what);
bool is_hermitian(const Operator& a, double tol);

}  // namespace qmon
