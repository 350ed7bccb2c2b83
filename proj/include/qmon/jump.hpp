#pragma once

#include "qmon/master_equation.hpp"

namespace qmon {

// Photodetection of channels.front(). Steppers receive a uniform variate u in
// [0,1) instead of a generator: dN = 1 iff u < P(dN = 1).

struct JumpOutcome {
    DensityMatrix rho;
    int dN = 0;
};

struct SseOutcome {
    StateVector psi;
    int dN = 0;
};

/// Below this <c^dag c> a state is dark and cannot emit.
inline constexpr double kDarkThreshold = 1e-14;
/// Euler jump steppers require eta kappa <c^dag c> dt below this.
inline constexpr double kMaxJumpProbability = 0.1;

/// eta kappa Tr[c^dag c rho] dt.
double jump_probability(const DensityMatrix& rho, const OpenSystemModel& model, double dt);

/// Applies the dN branch of the inefficient-detection photodetection SME and renormalizes.
DensityMatrix jump_sme_update(const DensityMatrix& rho, const OpenSystemModel& model, double dt, int dN);
JumpOutcome jump_sme_step(const DensityMatrix& rho, const OpenSystemModel& model, double dt, double u);

/// Pure-state version; needs eta = 1 and a single channel.
StateVector jump_sse_update(const StateVector& psi, const OpenSystemModel& model, double dt, int dN);
SseOutcome jump_sse_step(const StateVector& psi, const OpenSystemModel& model, double dt, double u);

/// Two-outcome Kraus map. The no-click numerator is
/// M0 rho M0^dag + (1 - eta) kappa c rho c^dag dt, so the update is completely positive for any dt.
DensityMatrix jump_kraus_update(const DensityMatrix& rho, const OpenSystemModel& model, double dt, int dN);
JumpOutcome jump_kraus_step(const DensityMatrix& rho, const OpenSystemModel& model, double dt, double u);

/// Unnormalized state carried as (rho / Tr rho, log Tr rho) to avoid under- and overflow.
struct WeightedState {
    DensityMatrix rho;
    double log_weight = 0.0;

    static WeightedState from(const DensityMatrix& rho_bar);
    DensityMatrix unnormalized() const;
    double weight() const;
};

enum class LinearScheme { euler, kraus };

/// Ostensible click probability eta kappa beta dt.
double ostensible_jump_probability(const OpenSystemModel& model, double dt, double beta);

/// Linear photodetection SME with reference rate beta; dN comes from the ostensible law.
/// `euler` applies the equation literally; `kraus` divides the Kraus numerator by the
/// ostensible probability of the outcome, so normalizing reproduces jump_kraus_update.
WeightedState linear_jump_step(const WeightedState& w, const OpenSystemModel& model, double dt, int dN,
                               double beta, LinearScheme scheme = LinearScheme::euler);

/// Feedback unitary exp(-iF) applied right after each click (eta = 1 only).
class JumpFeedback {
public:
    explicit JumpFeedback(const Operator& F);
    const Operator& F() const { return F_; }
    const Operator& unitary() const { return U_; }

private:
    Operator F_;
    Operator U_;
};

DensityMatrix jump_feedback_update(const DensityMatrix& rho, const OpenSystemModel& model,
                                   const JumpFeedback& fb, double dt, int dN);
JumpOutcome jump_feedback_step(const DensityMatrix& rho, const OpenSystemModel& model, const JumpFeedback& fb,
                               double dt, double u);

/// Model whose monitored channel is replaced by exp(-iF) c; its Lindblad equation is the
/// unconditional dynamics under photodetection feedback.
OpenSystemModel jump_feedback_model(const OpenSystemModel& model, const JumpFeedback& fb);

/// Cached form of the jump steppers for repeated use on a fixed model and dt.
class JumpStepper {
public:
    enum class Kind { sme, kraus, feedback };

    JumpStepper(const OpenSystemModel& model, double dt, Kind kind, const Operator& F = Operator());

    double probability(const DensityMatrix& rho) const;
    DensityMatrix update(const DensityMatrix& rho, int dN) const;
    JumpOutcome step(const DensityMatrix& rho, double u) const;
    WeightedState linear(const WeightedState& w, int dN, double beta, LinearScheme scheme) const;
    double dt() const { return dt_; }

private:
    DensityMatrix no_click(const DensityMatrix& rho) const;
    DensityMatrix click(const DensityMatrix& rho) const;
    void check_probability(double p) const;

    Kind kind_;
    double dt_;
    double kappa_;
    double eta_;
    Operator H_;
    Operator c_, cd_, cdc_;
    Operator jump_op_;    // c or exp(-iF) c
    Operator M0_, M0d_;   // Kraus no-click operator
    std::vector<Channel> unmonitored_;
};

}  // namespace qmon
