#include "qmon/diffusive.hpp"

#include <cmath>
#include <string>

#include "channel_util.hpp"

namespace qmon {

namespace {

// H[A] rho for a unit-trace rho, without the argument checks of measurement_superop.
Operator hsup(const Operator& a, const DensityMatrix& rho) {
    const Operator arho = a * rho;
    const Operator rhoad = arho.adjoint();  // rho A^dag for Hermitian rho
    const double mean = 2.0 * arho.trace().real();
    return arho + rhoad - mean * rho;
}

double mean_x(const Operator& c, const DensityMatrix& rho) {
    // <c + c^dag> = 2 Re Tr[c rho]
    return 2.0 * expectation(rho, c).real();
}

}  // namespace

DiffusiveStepper::DiffusiveStepper(const OpenSystemModel& model, double dt) : model_(model), dt_(dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("diffusive step: dt must be > 0");
    const detail::ChannelData d = detail::prepare(model, "diffusive stepper", true);
    kappa_ = d.kappa;
    eta_ = d.eta;
    sqrt_ek_ = std::sqrt(eta_ * kappa_);
    H_ = d.H;
    c_ = d.c;
    cd_ = d.cd;
    cdc_ = d.cdc;
    unmonitored_ = d.unmonitored;
    const Eigen::Index n = H_.rows();
    M_base_ = Operator::Identity(n, n) - kI * dt * H_ - 0.5 * dt * (kappa_ * cdc_ + d.unmonitored_decay);
}

void DiffusiveStepper::require_vacuum(const char* what) const {
    if (!model_.bath.is_white_vacuum()) {
        throw ModelError(std::string(what) + ": thermal or squeezed bath needs the generalized-bath stepper");
    }
}

Operator DiffusiveStepper::deterministic(const DensityMatrix& rho) const {
    Operator out = -kI * detail::comm_h(H_, rho);
    if (kappa_ != 0.0) out += kappa_ * (c_ * rho * cd_ - 0.5 * (cdc_ * rho + rho * cdc_));
    for (const auto& ch : unmonitored_) {
        if (ch.rate != 0.0) out += ch.rate * dissipator(ch.op, rho);
    }
    return out;
}

double DiffusiveStepper::current(const DensityMatrix& rho, double dw) const {
    require_same_dim(H_, rho, "homodyne current");
    return sqrt_ek_ * mean_x(c_, rho) * dt_ + dw;
}

DiffusiveOutcome DiffusiveStepper::sme(const DensityMatrix& rho, double dw) const {
    require_vacuum("homodyne_sme_step");
    const double dy = current(rho, dw);
    DensityMatrix next = rho + dt_ * deterministic(rho);
    if (sqrt_ek_ != 0.0) next += (sqrt_ek_ * dw) * hsup(c_, rho);
    return {detail::normalized(next, "homodyne_sme_step"), dy};
}

Operator DiffusiveStepper::kraus_numerator(const DensityMatrix& rho, double dy) const {
    const Operator M = M_base_ + (sqrt_ek_ * dy) * c_;
    Operator num = M * rho * M.adjoint();
    if (eta_ != 1.0) num += (1.0 - eta_) * kappa_ * dt_ * (c_ * rho * cd_);
    for (const auto& ch : unmonitored_) {
        if (ch.rate != 0.0) num += ch.rate * dt_ * (ch.op * rho * ch.op.adjoint());
    }
    return num;
}

DensityMatrix DiffusiveStepper::kraus_update(const DensityMatrix& rho, double dy) const {
    require_vacuum("homodyne_kraus_update");
    require_same_dim(H_, rho, "homodyne_kraus_update");
    return detail::normalized(kraus_numerator(rho, dy), "homodyne_kraus_update");
}

DiffusiveOutcome DiffusiveStepper::kraus(const DensityMatrix& rho, double dw) const {
    const double dy = current(rho, dw);
    return {kraus_update(rho, dy), dy};
}

HeterodyneOutcome DiffusiveStepper::heterodyne(const DensityMatrix& rho, double dw1, double dw2) const {
    require_vacuum("heterodyne_sme_step");
    require_same_dim(H_, rho, "heterodyne_sme_step");
    const double s = std::sqrt(0.5 * eta_ * kappa_);
    const Operator ic = kI * c_;
    const double dy1 = s * mean_x(c_, rho) * dt_ + dw1;
    const double dy2 = s * mean_x(ic, rho) * dt_ + dw2;
    DensityMatrix next = rho + dt_ * deterministic(rho);
    if (s != 0.0) next += (s * dw1) * hsup(c_, rho) + (s * dw2) * hsup(ic, rho);
    return {detail::normalized(next, "heterodyne_sme_step"), dy1, dy2};
}

WeightedState DiffusiveStepper::linear(const WeightedState& w, double dy, double mu, LinearScheme scheme) const {
    require_vacuum("linear_homodyne_step");
    const DensityMatrix& rho = w.rho;
    require_same_dim(H_, rho, "linear_homodyne_step");
    if (!std::isfinite(mu)) throw ModelError("linear_homodyne_step: mu must be finite");
    DensityMatrix next;
    double log_scale = 0.0;
    if (scheme == LinearScheme::euler) {
        const Operator crho = c_ * rho;
        next = rho + dt_ * deterministic(rho) +
               (sqrt_ek_ * (dy - sqrt_ek_ * mu * dt_)) * (crho + crho.adjoint() - mu * rho);
    } else {
        next = kraus_numerator(rho, dy);
        // p_ost(dy; 0) / p_ost(dy; mu)
        log_scale = -sqrt_ek_ * mu * dy + 0.5 * eta_ * kappa_ * mu * mu * dt_;
    }
    const double tr = next.trace().real();
    if (!(tr > 0.0) || !std::isfinite(tr)) {
        throw StepError("linear_homodyne_step: trace collapsed to " + std::to_string(tr));
    }
    WeightedState out;
    out.log_weight = w.log_weight + std::log(tr) + log_scale;
    out.rho = detail::normalized(next, "linear_homodyne_step");
    return out;
}

void DiffusiveStepper::set_feedback(const Operator& F) {
    require_same_dim(H_, F, "homodyne feedback");
    if (!is_hermitian(F, kDefaultTolerances.hermiticity)) throw ModelError("feedback operator F is not Hermitian");
    if (!(eta_ > 0.0)) throw ModelError("homodyne feedback requires eta > 0 (no signal to feed back)");
    F_ = F;
    has_feedback_ = true;
}

HomodyneFeedbackOutcome DiffusiveStepper::feedback(const DensityMatrix& rho, double dw) const {
    require_vacuum("homodyne_feedback_step");
    if (!has_feedback_) throw ModelError("homodyne_feedback_step: no feedback operator set");
    const double dy = current(rho, dw);
    const Operator crho = c_ * rho;
    const Operator x = crho + crho.adjoint();
    DensityMatrix next = rho + dt_ * deterministic(rho);
    next += (-kI * std::sqrt(kappa_) * dt_) * (F_ * x - x * F_);
    next += (dt_ / eta_) * dissipator(F_, rho);
    next += (sqrt_ek_ * dw) * hsup(c_, rho);
    // noise enters through the feedback unitary exp(-i F dw / sqrt(eta))
    next += (-kI * dw / std::sqrt(eta_)) * (F_ * rho - rho * F_);
    return {detail::normalized(next, "homodyne_feedback_step"), dy, dy / std::sqrt(eta_)};
}

double DiffusiveStepper::bath_current_scale() const {
    const BathSpec& b = model_.bath;
    return std::sqrt(2.0 * b.N + 1.0 + 2.0 * b.M.real());
}

DiffusiveOutcome DiffusiveStepper::bath_homodyne(const DensityMatrix& rho, double dw) const {
    const BathSpec& b = model_.bath;
    if (b.M.imag() != 0.0) {
        throw ModelError("generalized_bath_homodyne_step: the current scale is only defined for real M");
    }
    if (eta_ != 1.0) throw ModelError("generalized_bath_homodyne_step: requires eta = 1");
    if (model_.theta != 0.0) throw ModelError("generalized_bath_homodyne_step: requires theta = 0");
    require_same_dim(H_, rho, "generalized_bath_homodyne_step");
    const double L = 2.0 * b.N + 1.0 + 2.0 * b.M.real();
    if (!(L > 0.0)) throw ModelError("generalized_bath_homodyne_step: L = 2N + 1 + 2M must be > 0");
    const Operator s_op = (b.N + std::conj(b.M) + 1.0) * c_ - (b.N + b.M) * cd_;
    const double dy = std::sqrt(kappa_) * mean_x(c_, rho) * dt_ + std::sqrt(L) * dw;
    DensityMatrix next = rho + dt_ * generalized_bath_me_rhs(model_, rho);
    next += (std::sqrt(kappa_ / L) * dw) * hsup(s_op, rho);
    return {detail::normalized(next, "generalized_bath_homodyne_step"), dy};
}

HeterodyneOutcome DiffusiveStepper::bath_heterodyne(const DensityMatrix& rho, double dw1, double dw2) const {
    const BathSpec& b = model_.bath;
    if (b.M != cplx{}) throw ModelError("generalized_bath_heterodyne_step: only thermal baths (M = 0) are supported");
    if (eta_ != 1.0) throw ModelError("generalized_bath_heterodyne_step: requires eta = 1");
    if (model_.theta != 0.0) throw ModelError("generalized_bath_heterodyne_step: requires theta = 0");
    require_same_dim(H_, rho, "generalized_bath_heterodyne_step");
    const double s = std::sqrt(2.0 * (b.N + 1.0));
    const Operator s1 = (b.N + 1.0) * c_ - b.N * cd_;
    const Operator s2 = kI * ((b.N + 1.0) * c_ + b.N * cd_);
    const double sk = std::sqrt(kappa_);
    const double dy1 = sk * mean_x(c_, rho) * dt_ + s * dw1;
    const double dy2 = sk * mean_x(kI * c_, rho) * dt_ + s * dw2;
    DensityMatrix next = rho + dt_ * generalized_bath_me_rhs(model_, rho);
    next += (sk * dw1 / s) * hsup(s1, rho) + (sk * dw2 / s) * hsup(s2, rho);
    return {detail::normalized(next, "generalized_bath_heterodyne_step"), dy1, dy2};
}

double homodyne_current(const DensityMatrix& rho, const OpenSystemModel& model, double dt, double dw) {
    return DiffusiveStepper(model, dt).current(rho, dw);
}

DiffusiveOutcome homodyne_sme_step(const DensityMatrix& rho, const OpenSystemModel& model, double dt, double dw) {
    return DiffusiveStepper(model, dt).sme(rho, dw);
}

DensityMatrix homodyne_kraus_update(const DensityMatrix& rho, const OpenSystemModel& model, double dt, double dy) {
    return DiffusiveStepper(model, dt).kraus_update(rho, dy);
}

DiffusiveOutcome homodyne_kraus_step(const DensityMatrix& rho, const OpenSystemModel& model, double dt, double dw) {
    return DiffusiveStepper(model, dt).kraus(rho, dw);
}

Operator kraus_normalization_residual(const OpenSystemModel& model, double dt) {
    const detail::ChannelData d = detail::prepare(model, "kraus_normalization_residual", true);
    const Eigen::Index n = d.H.rows();
    const Operator A = Operator::Identity(n, n) - kI * dt * d.H - 0.5 * dt * (d.kappa * d.cdc + d.unmonitored_decay);
    // E[dy] = 0 and E[dy^2] = dt remove the cross terms and leave eta kappa c^dag c dt
    return A.adjoint() * A + dt * (d.kappa * d.cdc + d.unmonitored_decay) - Operator::Identity(n, n);
}

HeterodyneOutcome heterodyne_sme_step(const DensityMatrix& rho, const OpenSystemModel& model, double dt,
                                      double dw1, double dw2) {
    return DiffusiveStepper(model, dt).heterodyne(rho, dw1, dw2);
}

WeightedState linear_homodyne_step(const WeightedState& w, const OpenSystemModel& model, double dt, double dy,
                                   double mu, LinearScheme scheme) {
    return DiffusiveStepper(model, dt).linear(w, dy, mu, scheme);
}

HomodyneFeedbackOutcome homodyne_feedback_step(const DensityMatrix& rho, const OpenSystemModel& model,
                                               const Operator& F, double dt, double dw) {
    DiffusiveStepper s(model, dt);
    s.set_feedback(F);
    return s.feedback(rho, dw);
}

namespace {

struct FeedbackTerms {
    Operator H, c;
    double kappa, eta;
    std::vector<Channel> unmonitored;
};

FeedbackTerms feedback_terms(const OpenSystemModel& model, const Operator& F, const DensityMatrix& rho,
                             const char* what) {
    const detail::ChannelData d = detail::prepare(model, what, true);
    if (!model.bath.is_white_vacuum()) throw ModelError(std::string(what) + ": requires a vacuum bath");
    require_same_dim(d.H, F, what);
    require_same_dim(d.H, rho, what);
    if (!is_hermitian(F, kDefaultTolerances.hermiticity)) throw ModelError("feedback operator F is not Hermitian");
    if (!(d.eta > 0.0)) throw ModelError(std::string(what) + ": requires eta > 0");
    return {d.H, d.c, d.kappa, d.eta, d.unmonitored};
}

Operator common_terms(const FeedbackTerms& t, const DensityMatrix& rho) {
    Operator out = -kI * detail::comm_h(t.H, rho);
    for (const auto& ch : t.unmonitored) {
        if (ch.rate != 0.0) out += ch.rate * dissipator(ch.op, rho);
    }
    return out;
}

}  // namespace

Operator feedback_me_rhs(const DensityMatrix& rho, const OpenSystemModel& model, const Operator& F) {
    const FeedbackTerms t = feedback_terms(model, F, rho, "feedback_me_rhs");
    const Operator crho = t.c * rho;
    const Operator x = crho + rho * t.c.adjoint();
    return common_terms(t, rho) + t.kappa * dissipator(t.c, rho) - kI * std::sqrt(t.kappa) * (F * x - x * F) +
           (1.0 / t.eta) * dissipator(F, rho);
}

Operator lindblad_form_rhs(const DensityMatrix& rho, const OpenSystemModel& model, const Operator& F) {
    const FeedbackTerms t = feedback_terms(model, F, rho, "lindblad_form_rhs");
    const double sk = std::sqrt(t.kappa);
    const Operator hfb = 0.5 * sk * (t.c.adjoint() * F + F * t.c);
    const Operator cbar = sk * t.c - kI * F;
    Operator out = common_terms(t, rho) - kI * detail::comm_h(hfb, rho) + dissipator(cbar, rho);
    if (t.eta != 1.0) out += ((1.0 - t.eta) / t.eta) * dissipator(F, rho);
    return out;
}

DiffusiveOutcome generalized_bath_homodyne_step(const DensityMatrix& rho, const OpenSystemModel& model, double dt,
                                                double dw) {
    return DiffusiveStepper(model, dt).bath_homodyne(rho, dw);
}

HeterodyneOutcome generalized_bath_heterodyne_step(const DensityMatrix& rho, const OpenSystemModel& model,
                                                   double dt, double dw1, double dw2) {
    return DiffusiveStepper(model, dt).bath_heterodyne(rho, dw1, dw2);
}

SqueezeParameters squeeze_parameters(double N) {
    if (!(N >= 0.0) || !std::isfinite(N)) throw ModelError("squeeze_parameters: N must be >= 0");
    SqueezeParameters p;
    p.r = 0.5 * std::log(1.0 + 2.0 * N + 2.0 * std::sqrt(N * (N + 1.0)));
    p.mu = std::cosh(p.r);
    p.nu = std::sinh(p.r);
    return p;
}

Operator squeezed_vacuum_jump_operator(const Operator& c, double N) {
    require_square(c, "squeezed_vacuum_jump_operator");
    const SqueezeParameters p = squeeze_parameters(N);
    return p.mu * c - p.nu * c.adjoint();
}

}  // namespace qmon
