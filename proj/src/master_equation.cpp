#include "qmon/master_equation.hpp"

#include <cmath>
#include <optional>
#include <string>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

namespace qmon {

namespace {

using SuperOp = Eigen::MatrixXcd;

Operator double_commutator(const Operator& c, const DensityMatrix& rho) {
    const Operator crho = c * rho;
    return c * crho - 2.0 * crho * c + rho * c * c;
}

void check_rates(const OpenSystemModel& model) {
    for (const auto& ch : model.channels) {
        if (!(ch.rate >= 0.0) || !std::isfinite(ch.rate)) {
            throw ModelError("channel rate must be finite and >= 0, got " + std::to_string(ch.rate));
        }
    }
}

SuperOp left(const Operator& a) {
    const Operator id = Operator::Identity(a.rows(), a.cols());
    return Eigen::kroneckerProduct(id, a).eval();
}

SuperOp right(const Operator& b) {
    const Operator id = Operator::Identity(b.rows(), b.cols());
    return Eigen::kroneckerProduct(b.transpose(), id).eval();
}

// vec(A rho B) = (B^T kron A) vec(rho)
SuperOp sandwich(const Operator& a, const Operator& b) {
    return Eigen::kroneckerProduct(b.transpose(), a).eval();
}

SuperOp dissipator_super(const Operator& c) {
    const Operator cdc = c.adjoint() * c;
    return sandwich(c, c.adjoint()) - 0.5 * left(cdc) - 0.5 * right(cdc);
}

SuperOp double_commutator_super(const Operator& c) {
    const Operator cc = c * c;
    return left(cc) - 2.0 * sandwich(c, c) + right(cc);
}

DensityMatrix rk4_step(const OpenSystemModel& model, const DensityMatrix& rho, double dt) {
    const Operator k1 = lindblad_rhs(model, rho);
    const Operator k2 = lindblad_rhs(model, rho + 0.5 * dt * k1);
    const Operator k3 = lindblad_rhs(model, rho + 0.5 * dt * k2);
    const Operator k4 = lindblad_rhs(model, rho + dt * k3);
    return rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

void check_drift(const DensityMatrix& before, const DensityMatrix& after, std::size_t step) {
    const double drift = std::abs(after.trace() - before.trace());
    if (!after.allFinite() || !(drift <= kMaxTraceDriftPerStep)) {
        throw StepError("integrate_me: step rejected at step " + std::to_string(step) +
                        ", trace drift " + std::to_string(drift) + " exceeds " +
                        std::to_string(kMaxTraceDriftPerStep));
    }
}

}  // namespace

bool BathSpec::is_physical(double tol) const {
    if (!(N >= 0.0) || !std::isfinite(N)) return false;
    return std::norm(M) <= N * (N + 1.0) + tol;
}

void OpenSystemModel::validate(const Tolerances& tol) const {
    require_square(H, "OpenSystemModel.H");
    if (!is_hermitian(H, tol.hermiticity)) throw ModelError("Hamiltonian is not Hermitian");
    check_rates(*this);
    for (const auto& ch : channels) require_same_dim(H, ch.op, "OpenSystemModel channel");
    if (!(eta >= 0.0 && eta <= 1.0)) throw ModelError("efficiency out of [0,1]");
    if (!std::isfinite(theta)) throw ModelError("homodyne phase must be finite");
    if (!bath.is_physical()) throw ModelError("unphysical bath: |M|^2 > N(N+1)");
}

TimeGrid TimeGrid::from_final(double dt, double t_final) {
    if (!(dt > 0.0)) throw std::invalid_argument("TimeGrid: dt must be > 0");
    if (!(t_final >= dt)) throw std::invalid_argument("TimeGrid: t_final must be >= dt");
    const double n = std::round(t_final / dt);
    if (std::abs(n * dt - t_final) > 1e-9 * t_final) {
        throw std::invalid_argument("TimeGrid: t_final is not an integer multiple of dt");
    }
    return TimeGrid{dt, static_cast<std::size_t>(n)};
}

Operator liouvillian_apply(const OpenSystemModel& model, const DensityMatrix& rho) {
    require_square(model.H, "liouvillian_apply");
    require_same_dim(model.H, rho, "liouvillian_apply");
    if (!model.bath.is_vacuum()) {
        throw ModelError("liouvillian_apply: non-vacuum bath, use generalized_bath_me_rhs");
    }
    if (!is_hermitian(model.H, kDefaultTolerances.hermiticity)) {
        throw ModelError("Hamiltonian is not Hermitian");
    }
    check_rates(model);
    Operator out = -kI * (model.H * rho - rho * model.H);
    for (const auto& ch : model.channels) {
        if (ch.rate != 0.0) out += ch.rate * dissipator(ch.op, rho);
    }
    return out;
}

Operator coherent_drive_hamiltonian(const Operator& c, double kappa, cplx beta) {
    require_square(c, "coherent_drive_hamiltonian");
    if (!(kappa >= 0.0)) throw ModelError("coherent_drive_hamiltonian: kappa must be >= 0");
    return kI * std::sqrt(kappa) * (std::conj(beta) * c - beta * c.adjoint());
}

Operator generalized_bath_me_rhs(const OpenSystemModel& model, const DensityMatrix& rho) {
    require_square(model.H, "generalized_bath_me_rhs");
    require_same_dim(model.H, rho, "generalized_bath_me_rhs");
    const BathSpec& bath = model.bath;
    if (!bath.is_physical()) throw ModelError("unphysical bath: |M|^2 > N(N+1)");
    check_rates(model);
    Operator h = model.H;
    Operator out = Operator::Zero(rho.rows(), rho.cols());
    for (const auto& ch : model.channels) {
        if (ch.rate == 0.0) continue;
        const Operator& c = ch.op;
        const Operator cd = c.adjoint();
        out += ch.rate * (bath.N + 1.0) * dissipator(c, rho);
        if (bath.N != 0.0) out += ch.rate * bath.N * dissipator(cd, rho);
        if (bath.M != cplx{}) {
            out += 0.5 * ch.rate * bath.M * double_commutator(cd, rho);
            out += 0.5 * ch.rate * std::conj(bath.M) * double_commutator(c, rho);
        }
        if (bath.beta != cplx{}) h += coherent_drive_hamiltonian(c, ch.rate, bath.beta);
    }
    out += -kI * (h * rho - rho * h);
    return out;
}

Operator lindblad_rhs(const OpenSystemModel& model, const DensityMatrix& rho) {
    return model.bath.is_vacuum() ? liouvillian_apply(model, rho) : generalized_bath_me_rhs(model, rho);
}

Eigen::MatrixXcd liouvillian_matrix(const OpenSystemModel& model) {
    require_square(model.H, "liouvillian_matrix");
    if (model.dim() > kMaxSuperoperatorDim) {
        throw DimensionError("liouvillian_matrix: dimension " + std::to_string(model.dim()) +
                             " exceeds the supported limit " + std::to_string(kMaxSuperoperatorDim));
    }
    check_rates(model);
    const BathSpec& bath = model.bath;
    if (!bath.is_physical()) throw ModelError("unphysical bath: |M|^2 > N(N+1)");

    Operator h = model.H;
    const Eigen::Index n = model.dim();
    SuperOp L = SuperOp::Zero(n * n, n * n);
    for (const auto& ch : model.channels) {
        require_same_dim(model.H, ch.op, "liouvillian_matrix");
        if (ch.rate == 0.0) continue;
        const Operator& c = ch.op;
        const Operator cd = c.adjoint();
        L += ch.rate * (bath.N + 1.0) * dissipator_super(c);
        if (bath.N != 0.0) L += ch.rate * bath.N * dissipator_super(cd);
        if (bath.M != cplx{}) {
            L += 0.5 * ch.rate * bath.M * double_commutator_super(cd);
            L += 0.5 * ch.rate * std::conj(bath.M) * double_commutator_super(c);
        }
        if (bath.beta != cplx{}) h += coherent_drive_hamiltonian(c, ch.rate, bath.beta);
    }
    L += -kI * (left(h) - right(h));
    return L;
}

Eigen::VectorXcd vec(const DensityMatrix& rho) {
    return Eigen::Map<const Eigen::VectorXcd>(rho.data(), rho.size());
}

DensityMatrix unvec(const Eigen::VectorXcd& v, Eigen::Index dim) {
    if (v.size() != dim * dim) throw DimensionError("unvec: size mismatch");
    return Eigen::Map<const DensityMatrix>(v.data(), dim, dim);
}

Propagator::Propagator(const OpenSystemModel& model, double t) : dim_(model.dim()) {
    const Eigen::MatrixXcd L = liouvillian_matrix(model);
    map_ = (t * L).exp();
}

DensityMatrix Propagator::apply(const DensityMatrix& rho) const {
    if (rho.rows() != dim_ || rho.cols() != dim_) throw DimensionError("Propagator::apply: dimension mismatch");
    const Eigen::VectorXcd out = map_ * vec(rho);
    return unvec(out, dim_);
}

DensityMatrix propagate(const OpenSystemModel& model, const DensityMatrix& rho, double t) {
    return Propagator(model, t).apply(rho);
}

DensityMatrix steady_state(const OpenSystemModel& model) {
    const Eigen::Index n = model.dim();
    const Eigen::MatrixXcd L = liouvillian_matrix(model);
    Eigen::MatrixXcd aug(n * n + 1, n * n);
    aug.topRows(n * n) = L;
    aug.bottomRows(1) = vec(Operator::Identity(n, n)).transpose();
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n * n + 1);
    rhs(n * n) = 1.0;
    const Eigen::VectorXcd x = aug.colPivHouseholderQr().solve(rhs);
    DensityMatrix rho = unvec(x, n);
    rho = 0.5 * (rho + rho.adjoint());
    return rho / rho.trace();
}

std::vector<DensityMatrix> integrate_me(const OpenSystemModel& model, const DensityMatrix& rho0,
                                        const TimeGrid& grid, MeStepper stepper) {
    return integrate_me(model, HamiltonianSchedule{{grid.t_final() + grid.dt, model.H}}, rho0, grid, stepper);
}

std::vector<DensityMatrix> integrate_me(const OpenSystemModel& model, const HamiltonianSchedule& schedule,
                                        const DensityMatrix& rho0, const TimeGrid& grid,
                                        MeStepper stepper) {
    if (schedule.empty()) throw std::invalid_argument("integrate_me: empty Hamiltonian schedule");
    if (!(grid.dt > 0.0)) throw std::invalid_argument("integrate_me: dt must be > 0");
    OpenSystemModel current = model;
    current.H = schedule.front().H;
    current.validate();
    require_same_dim(current.H, rho0, "integrate_me");

    std::vector<DensityMatrix> out;
    out.reserve(grid.size());
    out.push_back(rho0);

    std::size_t segment = 0;
    std::optional<Propagator> prop;
    DensityMatrix rho = rho0;
    for (std::size_t k = 0; k < grid.steps; ++k) {
        const double t = grid.time(k);
        bool changed = false;
        while (segment + 1 < schedule.size() && t >= schedule[segment].t_end) {
            ++segment;
            changed = true;
        }
        if (changed) {
            current.H = schedule[segment].H;
            current.validate();
            prop.reset();
        }
        DensityMatrix next;
        if (stepper == MeStepper::rk4) {
            next = rk4_step(current, rho, grid.dt);
        } else {
            if (!prop) prop.emplace(current, grid.dt);
            next = prop->apply(rho);
        }
        check_drift(rho, next, k);
        rho = std::move(next);
        out.push_back(rho);
    }
    return out;
}

}  // namespace qmon
