#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "qmon/ensemble.hpp"

namespace qmon {

// Declarative scenario description. Plain values only (no Eigen types) so configs
// compare with == and round-trip through JSON exactly.

inline constexpr int kSchemaVersion = 1;

/// c * product of named operators, e.g. {"adag*a", 0.5, 0}.
struct Term {
    std::string op;
    double re = 1.0;
    double im = 0.0;
    bool operator==(const Term&) const = default;
};
using OperatorExpr = std::vector<Term>;
using Matrix = std::vector<std::vector<double>>;

enum class SystemType { qubit, boson, gaussian };
enum class FeedbackType { none, markovian, lqg };

struct SystemConfig {
    SystemType kind = SystemType::qubit;
    int dim = 2;        // boson truncation
    int n_modes = 1;    // gaussian
    bool operator==(const SystemConfig&) const = default;
};

struct ChannelConfig {
    OperatorExpr op;
    double rate = 1.0;
    bool operator==(const ChannelConfig&) const = default;
};

struct BathConfig {
    double N = 0.0;
    double M_re = 0.0, M_im = 0.0;
    double beta_re = 0.0, beta_im = 0.0;
    bool operator==(const BathConfig&) const = default;
};

struct OpoConfig {
    double chi = 0.0;
    double kappa = 1.0;
    bool operator==(const OpoConfig&) const = default;
};

struct ModelConfig {
    OperatorExpr hamiltonian;
    std::vector<ChannelConfig> channels;
    BathConfig bath;
    double eta = 1.0;
    double theta = 0.0;
    // gaussian systems: either an OPO or explicit matrices
    bool has_opo = false;
    OpoConfig opo;
    Matrix A, D, B, E;
    bool operator==(const ModelConfig&) const = default;
};

struct InitialConfig {
    int basis = 0;               // quantum: basis state index
    std::vector<double> r;       // gaussian: empty means 0
    Matrix sigma;                // gaussian: empty means identity
    bool operator==(const InitialConfig&) const = default;
};

struct UnravellingConfig {
    Unravelling type = Unravelling::none;
    Scheme scheme = Scheme::euler;
    bool linear = false;
    double beta = 1.0;
    double mu = 0.0;
    bool operator==(const UnravellingConfig&) const = default;
};

struct FeedbackConfig {
    FeedbackType type = FeedbackType::none;
    OperatorExpr F_op;   // quantum systems
    Matrix F, M, P, Q;   // gaussian systems; empty M means the optimal Markovian gain
    bool operator==(const FeedbackConfig&) const = default;
};

struct RunConfig {
    double dt = 1e-3;
    double t_final = 1.0;
    std::size_t n_traj = 1;
    std::uint64_t seed = 0;
    std::size_t stride = 1;
    NoiseMode noise = NoiseMode::gaussian;
    bool operator==(const RunConfig&) const = default;
};

struct ObservableConfig {
    std::string name;
    OperatorExpr op;                       // quantum
    MomentKind kind = MomentKind::mean;    // gaussian
    int i = 0, j = 0;
    bool operator==(const ObservableConfig&) const = default;
};

struct OutputConfig {
    std::string directory = "qmon_out";
    bool trajectories = false;
    std::vector<ObservableConfig> observables;
    bool operator==(const OutputConfig&) const = default;
};

struct ScenarioConfig {
    int schema = kSchemaVersion;
    SystemConfig system;
    ModelConfig model;
    InitialConfig initial;
    UnravellingConfig unravelling;
    FeedbackConfig feedback;
    RunConfig run;
    OutputConfig output;
    bool operator==(const ScenarioConfig&) const = default;
};

struct ConfigIssue {
    std::string path;
    std::string rule;
    std::string message;
};

class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(std::vector<ConfigIssue> issues);
    const std::vector<ConfigIssue>& issues() const { return issues_; }

private:
    std::vector<ConfigIssue> issues_;
};

std::string format_issue(const ConfigIssue& issue);

/// Parses and validates; throws ConfigError listing every violation found.
ScenarioConfig parse_config(const std::string& text);
/// Canonical JSON text with all defaults written out.
std::string serialize_config(const ScenarioConfig& config);
/// Applies "a.b.c=value" (value parsed as JSON, falling back to a string) to a config.
ScenarioConfig apply_overrides(const ScenarioConfig& config, const std::vector<std::string>& overrides);

}  // namespace qmon
