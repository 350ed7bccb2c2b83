#pragma once

#include "qmon/jump.hpp"
#include "qmon/master_equation.hpp"

namespace qmon {

// Homodyne and heterodyne unravellings of channels.front(). Steppers never draw
// noise themselves: Euler-type steppers take the Wiener increment dw and report the
// current dy, Kraus-type updates consume dy directly.

struct DiffusiveOutcome {
    DensityMatrix rho;
    double dy = 0.0;
};

struct HeterodyneOutcome {
    DensityMatrix rho;
    double dy1 = 0.0;
    double dy2 = 0.0;
};

struct HomodyneFeedbackOutcome {
    DensityMatrix rho;
    double dy = 0.0;
    /// dy / sqrt(eta), the increment the feedback Hamiltonian multiplies.
    double current_tilde = 0.0;
};

/// sqrt(eta kappa) <c e^{i theta} + h.c.> dt + dw.
double homodyne_current(const DensityMatrix& rho, const OpenSystemModel& model, double dt, double dw);

/// rho + (-i[H,rho] + kappa D[c] rho) dt + sqrt(eta kappa) H[c e^{i theta}] rho dw, renormalized.
DiffusiveOutcome homodyne_sme_step(const DensityMatrix& rho, const OpenSystemModel& model, double dt, double dw);

/// (M rho M^dag + kappa (1 - eta) c rho c^dag dt) / Tr with
/// M = 1 - iH dt - (kappa/2) c^dag c dt + sqrt(eta kappa) c dy.
DensityMatrix homodyne_kraus_update(const DensityMatrix& rho, const OpenSystemModel& model, double dt, double dy);
DiffusiveOutcome homodyne_kraus_step(const DensityMatrix& rho, const OpenSystemModel& model, double dt, double dw);

/// E_ost[M^dag M] + kappa (1 - eta) c^dag c dt - 1 under dy ~ N(0, dt); O(dt^2).
Operator kraus_normalization_residual(const OpenSystemModel& model, double dt);

/// Double homodyne with c/sqrt2 and i c/sqrt2.
HeterodyneOutcome heterodyne_sme_step(const DensityMatrix& rho, const OpenSystemModel& model, double dt,
                                      double dw1, double dw2);

/// Linear homodyne SME with reference mean mu; dy comes from N(sqrt(eta kappa) mu dt, dt).
/// `kraus` uses the Kraus numerator times the density ratio of the mu and zero-mean
/// ostensible laws, so its normalization equals homodyne_kraus_update.
WeightedState linear_homodyne_step(const WeightedState& w, const OpenSystemModel& model, double dt, double dy,
                                   double mu, LinearScheme scheme = LinearScheme::euler);

/// Homodyne feedback H_fb = I~(t) F applied right after the measurement; needs eta > 0.
HomodyneFeedbackOutcome homodyne_feedback_step(const DensityMatrix& rho, const OpenSystemModel& model,
                                               const Operator& F, double dt, double dw);

/// kappa D[c] - i sqrt(kappa)[F, c rho + rho c^dag] + (1/eta) D[F] (plus -i[H,.]).
Operator feedback_me_rhs(const DensityMatrix& rho, const OpenSystemModel& model, const Operator& F);
/// -i sqrt(kappa)[(c^dag F + F c)/2, .] + D[sqrt(kappa) c - iF] + ((1-eta)/eta) D[F] (plus -i[H,.]).
Operator lindblad_form_rhs(const DensityMatrix& rho, const OpenSystemModel& model, const Operator& F);

/// Squeezed-thermal homodyne SME (theta = 0, eta = 1, real M). Deterministic part is
/// generalized_bath_me_rhs; dy = sqrt(kappa) <c + c^dag> dt + sqrt(L) dw, L = 2N + 1 + 2M.
DiffusiveOutcome generalized_bath_homodyne_step(const DensityMatrix& rho, const OpenSystemModel& model, double dt,
                                                double dw);
/// Thermal heterodyne SME (M = 0), current scale sqrt(2(N+1)).
HeterodyneOutcome generalized_bath_heterodyne_step(const DensityMatrix& rho, const OpenSystemModel& model,
                                                   double dt, double dw1, double dw2);

struct SqueezeParameters {
    double r = 0.0;
    double mu = 1.0;   // cosh r
    double nu = 0.0;   // sinh r
};

/// r = ln(1 + 2N + 2 sqrt(N(N+1))) / 2.
SqueezeParameters squeeze_parameters(double N);
/// mu c - nu c^dag.
Operator squeezed_vacuum_jump_operator(const Operator& c, double N);

/// Cached diffusive steppers for a fixed model and dt.
class DiffusiveStepper {
public:
    DiffusiveStepper(const OpenSystemModel& model, double dt);

    double current(const DensityMatrix& rho, double dw) const;
    DiffusiveOutcome sme(const DensityMatrix& rho, double dw) const;
    DensityMatrix kraus_update(const DensityMatrix& rho, double dy) const;
    DiffusiveOutcome kraus(const DensityMatrix& rho, double dw) const;
    HeterodyneOutcome heterodyne(const DensityMatrix& rho, double dw1, double dw2) const;
    WeightedState linear(const WeightedState& w, double dy, double mu, LinearScheme scheme) const;
    /// Sets F for feedback(); validates Hermiticity and eta > 0.
    void set_feedback(const Operator& F);
    HomodyneFeedbackOutcome feedback(const DensityMatrix& rho, double dw) const;
    DiffusiveOutcome bath_homodyne(const DensityMatrix& rho, double dw) const;
    HeterodyneOutcome bath_heterodyne(const DensityMatrix& rho, double dw1, double dw2) const;

    double dt() const { return dt_; }
    /// Standard deviation of the current noise per sqrt(dt) for bath_homodyne.
    double bath_current_scale() const;

private:
    Operator deterministic(const DensityMatrix& rho) const;
    Operator kraus_numerator(const DensityMatrix& rho, double dy) const;
    void require_vacuum(const char* what) const;

    OpenSystemModel model_;
    double dt_;
    double kappa_, eta_, sqrt_ek_;
    Operator H_;
    Operator c_, cd_, cdc_;
    Operator M_base_;     // 1 - iH dt - (kappa/2) c^dag c dt - unmonitored decay
    std::vector<Channel> unmonitored_;
    Operator F_;
    bool has_feedback_ = false;
};

}  // namespace qmon
