#include "qmon/jump.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

#include "channel_util.hpp"

namespace qmon {

namespace {

void check_dt(double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("jump step: dt must be > 0");
}

void check_dN(int dN) {
    if (dN != 0 && dN != 1) throw std::invalid_argument("jump step: dN must be 0 or 1");
}

}  // namespace

JumpFeedback::JumpFeedback(const Operator& F) : F_(F) {
    require_square(F, "JumpFeedback");
    if (!is_hermitian(F, kDefaultTolerances.hermiticity)) throw ModelError("feedback operator F is not Hermitian");
    Eigen::SelfAdjointEigenSolver<Operator> es(0.5 * (F + F.adjoint()));
    const Eigen::VectorXcd phases = (-kI * es.eigenvalues().cast<cplx>()).array().exp();
    U_ = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

JumpStepper::JumpStepper(const OpenSystemModel& model, double dt, Kind kind, const Operator& F)
    : kind_(kind), dt_(dt) {
    check_dt(dt);
    const detail::ChannelData d = detail::prepare(model, "jump stepper", false);
    if (!model.bath.is_white_vacuum()) {
        throw ModelError("photodetection requires a vacuum bath (a coherent drive is allowed)");
    }
    kappa_ = d.kappa;
    eta_ = d.eta;
    H_ = d.H;
    c_ = d.c;
    cd_ = d.cd;
    cdc_ = d.cdc;
    unmonitored_ = d.unmonitored;
    jump_op_ = c_;
    if (kind == Kind::feedback) {
        if (eta_ != 1.0) throw ModelError("jump feedback requires eta = 1");
        require_same_dim(H_, F, "jump feedback");
        jump_op_ = JumpFeedback(F).unitary() * c_;
    }
    const Eigen::Index n = H_.rows();
    M0_ = Operator::Identity(n, n) - kI * dt * H_ - 0.5 * dt * (kappa_ * cdc_ + d.unmonitored_decay);
    M0d_ = M0_.adjoint();
}

double JumpStepper::probability(const DensityMatrix& rho) const {
    require_same_dim(H_, rho, "jump probability");
    return eta_ * kappa_ * expectation(rho, cdc_).real() * dt_;
}

void JumpStepper::check_probability(double p) const {
    const double limit = kind_ == Kind::kraus ? 1.0 : kMaxJumpProbability;
    if (!(p < limit)) {
        throw StepError("jump step: click probability " + std::to_string(p) + " per step exceeds " +
                        std::to_string(limit) + "; reduce dt");
    }
}

DensityMatrix JumpStepper::no_click(const DensityMatrix& rho) const {
    if (kind_ == Kind::kraus) {
        DensityMatrix num = M0_ * rho * M0d_;
        if (eta_ != 1.0) num += (1.0 - eta_) * kappa_ * dt_ * (c_ * rho * cd_);
        for (const auto& ch : unmonitored_) num += ch.rate * dt_ * (ch.op * rho * ch.op.adjoint());
        return detail::normalized(num, "jump_kraus_update");
    }
    const Operator cdcrho = cdc_ * rho;
    const double n = cdcrho.trace().real();
    // -(eta kappa / 2) H[c^dag c] rho
    Operator drift = -kI * detail::comm_h(H_, rho) -
                     0.5 * eta_ * kappa_ * (cdcrho + rho * cdc_ - 2.0 * n * rho);
    if (eta_ != 1.0) drift += (1.0 - eta_) * kappa_ * dissipator(c_, rho);
    for (const auto& ch : unmonitored_) {
        if (ch.rate != 0.0) drift += ch.rate * dissipator(ch.op, rho);
    }
    return detail::normalized(rho + dt_ * drift, "jump_sme_update");
}

DensityMatrix JumpStepper::click(const DensityMatrix& rho) const {
    const double n = expectation(rho, cdc_).real();
    if (!(n >= kDarkThreshold)) {
        throw StepError("jump step: cannot jump from a dark state (<c^dag c> = " + std::to_string(n) + ")");
    }
    return detail::normalized(jump_op_ * rho * jump_op_.adjoint(), "jump update");
}

DensityMatrix JumpStepper::update(const DensityMatrix& rho, int dN) const {
    check_dN(dN);
    require_same_dim(H_, rho, "jump update");
    return dN == 1 ? click(rho) : no_click(rho);
}

JumpOutcome JumpStepper::step(const DensityMatrix& rho, double u) const {
    const double p = probability(rho);
    check_probability(p);
    const int dN = u < p ? 1 : 0;
    return {update(rho, dN), dN};
}

WeightedState JumpStepper::linear(const WeightedState& w, int dN, double beta, LinearScheme scheme) const {
    check_dN(dN);
    if (!(beta > 0.0) || !std::isfinite(beta)) throw ModelError("linear jump step: beta must be > 0");
    const DensityMatrix& rho = w.rho;
    require_same_dim(H_, rho, "linear jump step");
    if (w.log_weight == -std::numeric_limits<double>::infinity()) return w;
    DensityMatrix next;
    if (dN == 1) {
        next = (jump_op_ * rho * jump_op_.adjoint()) / beta;
    } else if (scheme == LinearScheme::euler) {
        Operator drift = -kI * detail::comm_h(H_, rho) - 0.5 * kappa_ * (cdc_ * rho + rho * cdc_) +
                         eta_ * beta * kappa_ * rho;
        if (eta_ != 1.0) drift += (1.0 - eta_) * kappa_ * (c_ * rho * cd_);
        for (const auto& ch : unmonitored_) {
            if (ch.rate != 0.0) drift += ch.rate * dissipator(ch.op, rho);
        }
        next = rho + dt_ * drift;
    } else {
        const double p0 = 1.0 - eta_ * kappa_ * beta * dt_;
        if (!(p0 > 0.0)) throw StepError("linear jump step: ostensible click probability exceeds 1");
        DensityMatrix num = M0_ * rho * M0d_;
        if (eta_ != 1.0) num += (1.0 - eta_) * kappa_ * dt_ * (c_ * rho * cd_);
        for (const auto& ch : unmonitored_) num += ch.rate * dt_ * (ch.op * rho * ch.op.adjoint());
        next = num / p0;
    }
    const double tr = next.trace().real();
    // a click from an exactly dark state: the record has zero true probability
    if (tr == 0.0 && dN == 1) return {rho, -std::numeric_limits<double>::infinity()};
    if (!(tr > 0.0) || !std::isfinite(tr)) {
        throw StepError("linear jump step: trace collapsed to " + std::to_string(tr));
    }
    WeightedState out;
    out.log_weight = w.log_weight + std::log(tr);
    out.rho = detail::normalized(next, "linear jump step");
    return out;
}

double jump_probability(const DensityMatrix& rho, const OpenSystemModel& model, double dt) {
    return JumpStepper(model, dt, JumpStepper::Kind::sme).probability(rho);
}

DensityMatrix jump_sme_update(const DensityMatrix& rho, const OpenSystemModel& model, double dt, int dN) {
    return JumpStepper(model, dt, JumpStepper::Kind::sme).update(rho, dN);
}

JumpOutcome jump_sme_step(const DensityMatrix& rho, const OpenSystemModel& model, double dt, double u) {
    return JumpStepper(model, dt, JumpStepper::Kind::sme).step(rho, u);
}

DensityMatrix jump_kraus_update(const DensityMatrix& rho, const OpenSystemModel& model, double dt, int dN) {
    return JumpStepper(model, dt, JumpStepper::Kind::kraus).update(rho, dN);
}

JumpOutcome jump_kraus_step(const DensityMatrix& rho, const OpenSystemModel& model, double dt, double u) {
    return JumpStepper(model, dt, JumpStepper::Kind::kraus).step(rho, u);
}

DensityMatrix jump_feedback_update(const DensityMatrix& rho, const OpenSystemModel& model,
                                   const JumpFeedback& fb, double dt, int dN) {
    return JumpStepper(model, dt, JumpStepper::Kind::feedback, fb.F()).update(rho, dN);
}

JumpOutcome jump_feedback_step(const DensityMatrix& rho, const OpenSystemModel& model, const JumpFeedback& fb,
                               double dt, double u) {
    return JumpStepper(model, dt, JumpStepper::Kind::feedback, fb.F()).step(rho, u);
}

OpenSystemModel jump_feedback_model(const OpenSystemModel& model, const JumpFeedback& fb) {
    if (model.channels.empty()) throw ModelError("jump_feedback_model: model has no channel");
    OpenSystemModel out = model;
    out.channels.front().op = fb.unitary() * model.channels.front().op;
    return out;
}

WeightedState WeightedState::from(const DensityMatrix& rho_bar) {
    const double tr = rho_bar.trace().real();
    if (!(tr > 0.0)) throw ModelError("WeightedState: trace must be > 0");
    return {rho_bar / tr, std::log(tr)};
}

DensityMatrix WeightedState::unnormalized() const { return rho * std::exp(log_weight); }

double WeightedState::weight() const { return std::exp(log_weight); }

double ostensible_jump_probability(const OpenSystemModel& model, double dt, double beta) {
    if (!(beta > 0.0)) throw ModelError("ostensible probability: beta must be > 0");
    if (model.channels.empty()) throw ModelError("ostensible probability: model has no channel");
    return model.eta * model.channels.front().rate * beta * dt;
}

WeightedState linear_jump_step(const WeightedState& w, const OpenSystemModel& model, double dt, int dN,
                               double beta, LinearScheme scheme) {
    return JumpStepper(model, dt, JumpStepper::Kind::sme).linear(w, dN, beta, scheme);
}

namespace {

struct SseData {
    Operator H, c, cdc;
    double kappa;
};

SseData sse_data(const OpenSystemModel& model, const StateVector& psi, double dt) {
    check_dt(dt);
    const detail::ChannelData d = detail::prepare(model, "jump_sse", false);
    if (model.eta != 1.0) throw ModelError("jump_sse: the stochastic Schroedinger equation requires eta = 1");
    if (!d.unmonitored.empty()) throw ModelError("jump_sse: unmonitored channels need a density-matrix stepper");
    if (!model.bath.is_white_vacuum()) throw ModelError("photodetection requires a vacuum bath");
    if (psi.size() != d.H.rows()) throw DimensionError("jump_sse: dimension mismatch");
    return {d.H, d.c, d.cdc, d.kappa};
}

StateVector unit(const StateVector& v, const char* what) {
    const double nrm = v.norm();
    if (!(nrm > 0.0) || !std::isfinite(nrm)) throw StepError(std::string(what) + ": state norm collapsed");
    return v / nrm;
}

StateVector sse_update(const SseData& s, const StateVector& psi, double dt, int dN) {
    check_dN(dN);
    const StateVector cpsi = s.c * psi;
    const double n = cpsi.squaredNorm();
    if (dN == 1) {
        if (!(n >= kDarkThreshold)) throw StepError("jump_sse: cannot jump from a dark state");
        return unit(cpsi, "jump_sse");
    }
    const StateVector drift = -kI * (s.H * psi) + 0.5 * s.kappa * (n * psi - s.cdc * psi);
    return unit(psi + dt * drift, "jump_sse");
}

}  // namespace

StateVector jump_sse_update(const StateVector& psi, const OpenSystemModel& model, double dt, int dN) {
    return sse_update(sse_data(model, psi, dt), psi, dt, dN);
}

SseOutcome jump_sse_step(const StateVector& psi, const OpenSystemModel& model, double dt, double u) {
    const SseData s = sse_data(model, psi, dt);
    const double p = s.kappa * (s.c * psi).squaredNorm() * dt;
    if (!(p < kMaxJumpProbability)) throw StepError("jump_sse: click probability per step too large; reduce dt");
    const int dN = u < p ? 1 : 0;
    return {sse_update(s, psi, dt, dN), dN};
}

}  // namespace qmon
