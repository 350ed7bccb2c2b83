#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qmon/diffusive.hpp"
#include "qmon/gaussian.hpp"
#include "qmon/jump.hpp"
#include "qmon/master_equation.hpp"

namespace qmon {

enum class NoiseMode { gaussian, two_point };

struct EnsembleSpec {
    std::size_t n_traj = 1;
    std::uint64_t seed = 0;
    double dt = 1e-3;
    double t_final = 1.0;
    /// 0 = hardware concurrency.
    unsigned threads = 0;
    NoiseMode noise = NoiseMode::gaussian;
    /// Statistics are recorded every `stride` steps (and at the final step).
    std::size_t stride = 1;
    bool store_trajectories = false;
    /// Eigenvalues below -positivity_tol count as positivity violations.
    double positivity_tol = 1e-12;

    void validate() const;
};

enum class Unravelling { none, jump, homodyne, heterodyne };
enum class Scheme { euler, kraus };

struct Observable {
    std::string name;
    Operator op;
};

struct QuantumScenario {
    OpenSystemModel model;
    DensityMatrix rho0;
    Unravelling unravelling = Unravelling::none;
    Scheme scheme = Scheme::euler;
    /// Linear (unnormalized) trajectories sampled from the ostensible law.
    bool linear = false;
    double beta = 1.0;   // ostensible click rate factor (jump)
    double mu = 0.0;     // ostensible current mean (homodyne)
    /// Jump: exp(-iF) after each click. Homodyne: H_fb = I(t) F.
    std::optional<Operator> feedback;
    std::vector<Observable> observables;

    void validate() const;
};

enum class MomentKind {
    mean,        // r_i
    excess,      // 2 r_i r_j
    sigma_c,     // conditional covariance entry
    sigma_unc,   // sigma_c + 2 r_i r_j
};

struct GaussianObservable {
    std::string name;
    MomentKind kind = MomentKind::mean;
    Eigen::Index i = 0;
    Eigen::Index j = 0;
};

struct GaussianScenario {
    GaussianModel model;
    GaussianState initial;
    ControlLaw control = NoControl{};
    std::vector<GaussianObservable> observables;

    void validate() const;
};

struct EnsembleStats {
    std::vector<double> times;
    std::vector<std::string> names;
    /// mean[o][k], se[o][k] for observable o at recorded time k.
    std::vector<std::vector<double>> mean;
    std::vector<std::vector<double>> se;
    std::size_t n_traj = 0;

    std::size_t positivity_violations = 0;   // steps with min eigenvalue below -tol
    double min_eigenvalue = 0.0;             // over all recorded trajectory states

    bool weighted = false;
    /// Effective sample size (sum w)^2 / sum w^2 at the final time; n_traj when unweighted.
    double ess = 0.0;
    bool ess_warning = false;

    /// trajectories[n][k][o] when storage was requested.
    std::vector<std::vector<std::vector<double>>> trajectories;

    std::size_t index_of(const std::string& name) const;
};

/// Record times of a run: k dt for k = 0, stride, 2 stride, ..., steps.
std::vector<std::size_t> record_steps(const EnsembleSpec& spec);

EnsembleStats run_ensemble(const EnsembleSpec& spec, const QuantumScenario& scenario);
EnsembleStats run_ensemble(const EnsembleSpec& spec, const GaussianScenario& scenario);

/// Deterministic reference for a quantum scenario: the master equation whose solution the
/// unravelling averages to, evaluated on the record times. Result is [o][k].
std::vector<std::vector<double>> me_reference(const EnsembleSpec& spec, const QuantumScenario& scenario);

struct ComparisonReport {
    std::vector<std::vector<double>> z;   // [o][k]
    double max_abs_z = 0.0;
    std::size_t worst_observable = 0;
    std::size_t worst_time_index = 0;
    double threshold = 4.0;
    bool pass = true;
};

/// z = (mean - reference) / se, pointwise.
ComparisonReport compare_to_me(const EnsembleStats& stats, const std::vector<std::vector<double>>& reference,
                               double threshold = 4.0);
/// z = (mean_a - mean_b) / sqrt(se_a^2 + se_b^2).
ComparisonReport compare_stats(const EnsembleStats& a, const EnsembleStats& b, double threshold = 4.0);

}  // namespace qmon
