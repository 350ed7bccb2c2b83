#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "qmon/config.hpp"
#include "qmon/ensemble.hpp"

namespace qmon {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A config turned into solver inputs.
struct BuiltScenario {
    bool gaussian = false;
    /// Gaussian systems: conditional (monitored) trajectories or unconditional moments.
    bool conditional = true;
    QuantumScenario quantum;
    GaussianScenario gauss;
    EnsembleSpec spec;
};

/// Assembles operators and models; physical-validity failures become ConfigError.
BuiltScenario build_scenario(const ScenarioConfig& config);

/// Evaluates "adag*a"-style expressions against the standard operator set.
Operator evaluate_expr(const OperatorExpr& expr, const OperatorSet& ops);
OperatorSet operator_set(const SystemConfig& system);

/// Runs the scenario without touching the disk.
EnsembleStats execute(const BuiltScenario& built, unsigned threads = 0);

/// Steady-state summary as JSON text; empty when none applies.
std::string steady_state_json(const BuiltScenario& built);

/// t, then name.mean and name.se per observable, 17 significant digits.
std::string stats_csv(const EnsembleStats& stats);
/// trajectory, t, then one column per observable.
std::string trajectories_csv(const EnsembleStats& stats);

struct RunOptions {
    unsigned threads = 0;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output_dir;
};

struct RunSummary {
    std::string output_dir;
    EnsembleStats stats;
    double wall_time_s = 0.0;
};

/// Writes stats.csv, manifest.json, steady_state.json (when available) and
/// trajectories.csv (when requested) into the output directory.
RunSummary run_scenario(const ScenarioConfig& config, const RunOptions& options = {});

/// Accepts a config document or a manifest written by run_scenario.
ScenarioConfig load_config_or_manifest(const std::string& text);

}  // namespace qmon
