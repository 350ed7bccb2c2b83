#include "qmon/scenario.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace qmon {

using json = nlohmann::json;

namespace {

RealMatrix to_eigen(const Matrix& m) {
    if (m.empty()) return RealMatrix();
    RealMatrix out(static_cast<Eigen::Index>(m.size()), static_cast<Eigen::Index>(m.front().size()));
    for (std::size_t i = 0; i < m.size(); ++i) {
        for (std::size_t j = 0; j < m[i].size(); ++j) out(i, j) = m[i][j];
    }
    return out;
}

json matrix_json(const RealMatrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json r = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
        rows.push_back(r);
    }
    return rows;
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

GaussianModel gaussian_model(const ScenarioConfig& c) {
    if (c.model.has_opo) {
        if (c.system.n_modes != 1) throw DimensionError("the OPO model has a single mode (n_modes = 1)");
        return opo_model(c.model.opo.chi, c.model.opo.kappa, c.model.eta);
    }
    GaussianModel m;
    m.n_modes = c.system.n_modes;
    m.A = to_eigen(c.model.A);
    m.D = to_eigen(c.model.D);
    m.B = to_eigen(c.model.B);
    m.E = to_eigen(c.model.E);
    if (m.B.size() == 0) m.B = RealMatrix::Zero(m.dim(), 1);
    if (m.E.size() == 0) m.E = RealMatrix::Zero(m.dim(), m.B.cols());
    return m;
}

BuiltScenario build(const ScenarioConfig& c) {
    BuiltScenario b;
    b.spec.n_traj = c.run.n_traj;
    b.spec.seed = c.run.seed;
    b.spec.dt = c.run.dt;
    b.spec.t_final = c.run.t_final;
    b.spec.stride = c.run.stride;
    b.spec.noise = c.run.noise;
    b.spec.store_trajectories = c.output.trajectories;
    b.spec.validate();

    if (c.system.kind == SystemType::gaussian) {
        b.gaussian = true;
        b.conditional = c.unravelling.type == Unravelling::homodyne;
        GaussianScenario& g = b.gauss;
        g.model = gaussian_model(c);
        g.model.validate();
        const Eigen::Index n = g.model.dim();
        g.initial.r = c.initial.r.empty() ? RealVector::Zero(n)
                                          : RealVector(Eigen::Map<const RealVector>(c.initial.r.data(),
                                                                                   static_cast<Eigen::Index>(c.initial.r.size())));
        g.initial.sigma = c.initial.sigma.empty() ? RealMatrix::Identity(n, n) : to_eigen(c.initial.sigma);
        if (c.feedback.type == FeedbackType::markovian) {
            const RealMatrix F = to_eigen(c.feedback.F);
            const RealMatrix M = c.feedback.M.empty() ? markovian_gain(g.model, F).M : to_eigen(c.feedback.M);
            g.control = CurrentFeedback{F, M};
        } else if (c.feedback.type == FeedbackType::lqg) {
            const RealMatrix F = to_eigen(c.feedback.F);
            const LqgGain gain = lqg_gain(g.model, F, to_eigen(c.feedback.P), to_eigen(c.feedback.Q));
            g.control = StateFeedback{F, gain.K};
        }
        for (const auto& o : c.output.observables) g.observables.push_back({o.name, o.kind, o.i, o.j});
        g.validate();
        return b;
    }

    QuantumScenario& q = b.quantum;
    const OperatorSet ops = operator_set(c.system);
    const Eigen::Index dim = ops.at("id").rows();
    q.model.H = c.model.hamiltonian.empty() ? Operator::Zero(dim, dim) : evaluate_expr(c.model.hamiltonian, ops);
    for (const auto& ch : c.model.channels) q.model.channels.push_back({ch.rate, evaluate_expr(ch.op, ops)});
    q.model.bath.N = c.model.bath.N;
    q.model.bath.M = cplx(c.model.bath.M_re, c.model.bath.M_im);
    q.model.bath.beta = cplx(c.model.bath.beta_re, c.model.bath.beta_im);
    q.model.eta = c.model.eta;
    q.model.theta = c.model.theta;
    if (c.initial.basis < 0 || c.initial.basis >= dim) {
        throw DimensionError("initial basis index outside [0, " + std::to_string(dim - 1) + "]");
    }
    q.rho0 = basis_state(static_cast<int>(dim), c.initial.basis);
    q.unravelling = c.unravelling.type;
    q.scheme = c.unravelling.scheme;
    q.linear = c.unravelling.linear;
    q.beta = c.unravelling.beta;
    q.mu = c.unravelling.mu;
    if (c.feedback.type == FeedbackType::markovian) q.feedback = evaluate_expr(c.feedback.F_op, ops);
    for (const auto& o : c.output.observables) q.observables.push_back({o.name, evaluate_expr(o.op, ops)});
    q.validate();
    return b;
}

EnsembleStats unconditional_gaussian(const BuiltScenario& b) {
    const GaussianScenario& g = b.gauss;
    const TimeGrid grid = TimeGrid::from_final(b.spec.dt, b.spec.t_final);
    const std::vector<std::size_t> rec = record_steps(b.spec);
    EnsembleStats st;
    st.n_traj = 1;
    st.ess = 1.0;
    st.min_eigenvalue = 0.0;
    for (const auto& o : g.observables) st.names.push_back(o.name);
    st.mean.assign(g.observables.size(), {});
    st.se.assign(g.observables.size(), {});
    GaussianState s = g.initial;
    const double dt = b.spec.dt;
    std::size_t r = 0;
    for (std::size_t k = 0; k <= grid.steps; ++k) {
        if (r < rec.size() && rec[r] == k) {
            st.times.push_back(grid.time(k));
            for (std::size_t o = 0; o < g.observables.size(); ++o) {
                const auto& ob = g.observables[o];
                st.mean[o].push_back(ob.kind == MomentKind::mean ? s.r(ob.i) : s.sigma(ob.i, ob.j));
                st.se[o].push_back(0.0);
            }
            ++r;
        }
        if (k == grid.steps) break;
        auto add = [](const GaussianState& a, const MomentRates& m, double h) {
            return GaussianState{a.r + h * m.dr, a.sigma + h * m.dsigma};
        };
        const MomentRates k1 = unconditional_moment_rhs(g.model, s);
        const MomentRates k2 = unconditional_moment_rhs(g.model, add(s, k1, 0.5 * dt));
        const MomentRates k3 = unconditional_moment_rhs(g.model, add(s, k2, 0.5 * dt));
        const MomentRates k4 = unconditional_moment_rhs(g.model, add(s, k3, dt));
        s.r += (dt / 6.0) * (k1.dr + 2.0 * k2.dr + 2.0 * k3.dr + k4.dr);
        s.sigma += (dt / 6.0) * (k1.dsigma + 2.0 * k2.dsigma + 2.0 * k3.dsigma + k4.dsigma);
        s.sigma = 0.5 * (s.sigma + s.sigma.transpose()).eval();
        if (!s.r.allFinite() || !s.sigma.allFinite()) throw PhysicalityViolation("non-finite Gaussian moments", k);
    }
    return st;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw IoError("cannot open " + p.string() + " for writing");
    f << text;
    f.close();
    if (!f) throw IoError("failed writing " + p.string());
}

}  // namespace

OperatorSet operator_set(const SystemConfig& system) {
    if (system.kind == SystemType::gaussian) throw ModelError("gaussian systems have no operator set");
    OperatorSet ops = system.kind == SystemType::qubit ? build_standard_ops(SystemKind::qubit)
                                                       : build_standard_ops(SystemKind::boson, system.dim);
    if (system.kind == SystemType::qubit) {
        // basis order (|e>, |g>)
        ops["pe"] = basis_state(2, 0);
        ops["pg"] = basis_state(2, 1);
    }
    return ops;
}

Operator evaluate_expr(const OperatorExpr& expr, const OperatorSet& ops) {
    const Eigen::Index dim = ops.at("id").rows();
    Operator out = Operator::Zero(dim, dim);
    for (const auto& t : expr) {
        Operator prod = Operator::Identity(dim, dim);
        std::size_t start = 0;
        for (;;) {
            const auto star = t.op.find('*', start);
            const std::string name = t.op.substr(start, star == std::string::npos ? std::string::npos : star - start);
            if (auto it = ops.find(name); it != ops.end()) {
                prod = (prod * it->second).eval();
            } else if (name.rfind("proj", 0) == 0 && name.size() > 4 &&
                       name.find_first_not_of("0123456789", 4) == std::string::npos) {
                const long k = std::stol(name.substr(4));
                if (k >= dim) throw DimensionError("projector " + name + " outside the Hilbert space");
                prod = (prod * basis_state(static_cast<int>(dim), static_cast<int>(k))).eval();
            } else {
                throw ModelError("unknown operator '" + name + "'");
            }
            if (star == std::string::npos) break;
            start = star + 1;
        }
        out += cplx(t.re, t.im) * prod;
    }
    return out;
}

BuiltScenario build_scenario(const ScenarioConfig& config) {
    try {
        return build(config);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError({{"model", "physical-validity", e.what()}});
    } catch (const StabilityError& e) {
        throw ConfigError({{"feedback", "closed-loop-stability", e.what()}});
    } catch (const ConvergenceError& e) {
        throw ConfigError({{"feedback", "gain-solver", e.what()}});
    }
}

EnsembleStats execute(const BuiltScenario& built, unsigned threads) {
    EnsembleSpec spec = built.spec;
    spec.threads = threads;
    if (!built.gaussian) return run_ensemble(spec, built.quantum);
    if (!built.conditional) {
        BuiltScenario b = built;
        b.spec = spec;
        return unconditional_gaussian(b);
    }
    return run_ensemble(spec, built.gauss);
}

std::string steady_state_json(const BuiltScenario& b) {
    json j;
    if (b.gaussian) {
        const GaussianScenario& g = b.gauss;
        if (!b.conditional) {
            const HurwitzReport h = hurwitz(g.model.A);
            j["drift_max_real_part"] = h.max_real_part;
            if (!h.stable()) {
                j["stable"] = false;
                return j.dump(2) + "\n";
            }
            j["stable"] = true;
            j["sigma_unc"] = matrix_json(unconditional_steady_state(g.model));
            return j.dump(2) + "\n";
        }
        const ClosedLoopSteadyState ss = closed_loop_unconditional(g.model, g.control);
        j["stable"] = true;
        j["closed_loop_max_real_part"] = ss.closed_loop.max_real_part;
        j["sigma_c"] = matrix_json(ss.sigma_c);
        j["Sigma"] = matrix_json(ss.Sigma);
        j["sigma_unc"] = matrix_json(ss.sigma_unc);
        if (const auto* cf = std::get_if<CurrentFeedback>(&g.control)) j["M"] = matrix_json(cf->M);
        if (const auto* sf = std::get_if<StateFeedback>(&g.control)) j["K"] = matrix_json(sf->K);
        return j.dump(2) + "\n";
    }
    const QuantumScenario& q = b.quantum;
    if (q.model.dim() > kMaxSuperoperatorDim) return {};
    if (q.feedback && q.unravelling == Unravelling::homodyne) return {};
    OpenSystemModel m = q.model;
    if (q.feedback) m = jump_feedback_model(m, JumpFeedback(*q.feedback));
    const DensityMatrix rho = steady_state(m);
    j["rho_real"] = matrix_json(rho.real());
    j["rho_imag"] = matrix_json(rho.imag());
    json obs = json::object();
    for (const auto& o : q.observables) obs[o.name] = expectation(rho, o.op).real();
    j["observables"] = obs;
    return j.dump(2) + "\n";
}

std::string stats_csv(const EnsembleStats& st) {
    std::string out = "t";
    for (const auto& n : st.names) out += "," + n + ".mean," + n + ".se";
    out += "\n";
    for (std::size_t k = 0; k < st.times.size(); ++k) {
        out += fmt(st.times[k]);
        for (std::size_t o = 0; o < st.names.size(); ++o) out += "," + fmt(st.mean[o][k]) + "," + fmt(st.se[o][k]);
        out += "\n";
    }
    return out;
}

std::string trajectories_csv(const EnsembleStats& st) {
    std::string out = "trajectory,t";
    for (const auto& n : st.names) out += "," + n;
    out += "\n";
    for (std::size_t i = 0; i < st.trajectories.size(); ++i) {
        for (std::size_t k = 0; k < st.trajectories[i].size(); ++k) {
            out += std::to_string(i) + "," + fmt(st.times[k]);
            for (double v : st.trajectories[i][k]) out += "," + fmt(v);
            out += "\n";
        }
    }
    return out;
}

RunSummary run_scenario(const ScenarioConfig& config, const RunOptions& options) {
    ScenarioConfig cfg = config;
    if (options.seed) cfg.run.seed = *options.seed;
    if (options.output_dir) cfg.output.directory = *options.output_dir;
    const BuiltScenario built = build_scenario(cfg);

    const auto t0 = std::chrono::steady_clock::now();
    RunSummary sum;
    sum.stats = execute(built, options.threads);
    const std::string steady = steady_state_json(built);
    sum.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    sum.output_dir = cfg.output.directory;

    namespace fs = std::filesystem;
    const fs::path dir(cfg.output.directory);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());

    json files = json::array({"stats.csv"});
    write_file(dir / "stats.csv", stats_csv(sum.stats));
    if (cfg.output.trajectories) {
        write_file(dir / "trajectories.csv", trajectories_csv(sum.stats));
        files.push_back("trajectories.csv");
    }
    if (!steady.empty()) {
        write_file(dir / "steady_state.json", steady);
        files.push_back("steady_state.json");
    }
    json man;
    man["qmon_manifest"] = 1;
    man["version"] = QMON_VERSION;
    man["config"] = json::parse(serialize_config(cfg));
    man["seed"] = cfg.run.seed;
    man["threads"] = options.threads;
    man["wall_time_s"] = sum.wall_time_s;
    man["n_traj"] = sum.stats.n_traj;
    man["positivity_violations"] = sum.stats.positivity_violations;
    man["min_eigenvalue"] = sum.stats.min_eigenvalue;
    man["ess"] = sum.stats.ess;
    man["ess_warning"] = sum.stats.ess_warning;
    man["files"] = files;
    write_file(dir / "manifest.json", man.dump(2) + "\n");
    return sum;
}

ScenarioConfig load_config_or_manifest(const std::string& text) {
    const json j = json::parse(text, nullptr, false);
    if (!j.is_discarded() && j.is_object() && j.contains("qmon_manifest") && j.contains("config")) {
        return parse_config(j["config"].dump());
    }
    return parse_config(text);
}

}  // namespace qmon
