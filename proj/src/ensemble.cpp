#include "qmon/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <thread>

#include <Eigen/Eigenvalues>

#include "qmon/rng.hpp"

namespace qmon {

namespace {

// Trajectories are reduced in fixed-size blocks, merged in block order, so the
// floating-point result does not depend on the number of workers.
constexpr std::size_t kBlockSize = 64;

struct TrajectoryResult {
    std::vector<std::vector<double>> values;   // [k][o], already multiplied by the weight
    std::vector<double> weights;               // [k], empty when unweighted
    std::size_t violations = 0;
    double min_eig = std::numeric_limits<double>::infinity();
};

// Welford accumulators per (observable, time), mergeable with Chan's update.
struct Moments {
    std::size_t n = 0;
    std::vector<double> mean, m2;   // flattened [o * nt + k]
    std::vector<double> sum_w, sum_w2;

    Moments(std::size_t cells, std::size_t nt) : mean(cells, 0.0), m2(cells, 0.0), sum_w(nt, 0.0), sum_w2(nt, 0.0) {}

    void add(const TrajectoryResult& r, std::size_t n_obs) {
        ++n;
        const std::size_t nt = r.values.size();
        for (std::size_t k = 0; k < nt; ++k) {
            for (std::size_t o = 0; o < n_obs; ++o) {
                const std::size_t idx = o * nt + k;
                const double d = r.values[k][o] - mean[idx];
                mean[idx] += d / static_cast<double>(n);
                m2[idx] += d * (r.values[k][o] - mean[idx]);
            }
            if (!r.weights.empty()) {
                sum_w[k] += r.weights[k];
                sum_w2[k] += r.weights[k] * r.weights[k];
            }
        }
    }

    void merge(const Moments& b) {
        if (b.n == 0) return;
        const double na = static_cast<double>(n), nb = static_cast<double>(b.n), nt = na + nb;
        for (std::size_t i = 0; i < mean.size(); ++i) {
            const double d = b.mean[i] - mean[i];
            mean[i] += d * nb / nt;
            m2[i] += b.m2[i] + d * d * na * nb / nt;
        }
        for (std::size_t k = 0; k < sum_w.size(); ++k) {
            sum_w[k] += b.sum_w[k];
            sum_w2[k] += b.sum_w2[k];
        }
        n += b.n;
    }
};

struct BlockResult {
    Moments moments{0, 0};
    std::size_t violations = 0;
    double min_eig = std::numeric_limits<double>::infinity();
    std::vector<std::vector<std::vector<double>>> stored;
    std::exception_ptr error;
};

unsigned worker_count(unsigned requested, std::size_t n_blocks) {
    unsigned t = requested == 0 ? std::max(1u, std::thread::hardware_concurrency()) : requested;
    return static_cast<unsigned>(std::min<std::size_t>(t, n_blocks));
}

EnsembleStats run_blocks(const EnsembleSpec& spec, const std::vector<std::string>& names, bool weighted,
                         const std::function<TrajectoryResult(std::size_t)>& trajectory) {
    const std::vector<std::size_t> rec = record_steps(spec);
    const std::size_t nt = rec.size(), n_obs = names.size();
    const std::size_t n_blocks = (spec.n_traj + kBlockSize - 1) / kBlockSize;
    std::vector<BlockResult> blocks(n_blocks);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};

    auto worker = [&]() {
        for (;;) {
            const std::size_t b = next.fetch_add(1);
            if (b >= n_blocks || failed.load()) return;
            BlockResult& out = blocks[b];
            out.moments = Moments(n_obs * nt, nt);
            try {
                const std::size_t end = std::min(spec.n_traj, (b + 1) * kBlockSize);
                for (std::size_t n = b * kBlockSize; n < end; ++n) {
                    TrajectoryResult r = trajectory(n);
                    out.moments.add(r, n_obs);
                    out.violations += r.violations;
                    out.min_eig = std::min(out.min_eig, r.min_eig);
                    if (spec.store_trajectories) out.stored.push_back(std::move(r.values));
                }
            } catch (...) {
                out.error = std::current_exception();
                failed.store(true);
                return;
            }
        }
    };

    const unsigned nw = worker_count(spec.threads, n_blocks);
    if (nw <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < nw; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    // lowest failing block wins so the reported error is reproducible
    for (const auto& b : blocks) {
        if (b.error) std::rethrow_exception(b.error);
    }

    Moments total(n_obs * nt, nt);
    EnsembleStats st;
    st.min_eigenvalue = std::numeric_limits<double>::infinity();
    for (auto& b : blocks) {
        total.merge(b.moments);
        st.positivity_violations += b.violations;
        st.min_eigenvalue = std::min(st.min_eigenvalue, b.min_eig);
        if (spec.store_trajectories) {
            for (auto& t : b.stored) st.trajectories.push_back(std::move(t));
        }
    }

    st.n_traj = spec.n_traj;
    st.names = names;
    for (std::size_t k : rec) st.times.push_back(static_cast<double>(k) * spec.dt);
    const double n = static_cast<double>(spec.n_traj);
    st.mean.assign(n_obs, std::vector<double>(nt));
    st.se.assign(n_obs, std::vector<double>(nt));
    for (std::size_t o = 0; o < n_obs; ++o) {
        for (std::size_t k = 0; k < nt; ++k) {
            const std::size_t idx = o * nt + k;
            st.mean[o][k] = total.mean[idx];
            st.se[o][k] = spec.n_traj > 1 ? std::sqrt(total.m2[idx] / (n - 1.0) / n) : 0.0;
        }
    }
    st.weighted = weighted;
    if (weighted) {
        const double sw = total.sum_w.back(), sw2 = total.sum_w2.back();
        st.ess = sw2 > 0.0 ? sw * sw / sw2 : 0.0;
        st.ess_warning = st.ess < 0.01 * n;
    } else {
        st.ess = n;
    }
    return st;
}

double min_eig(const DensityMatrix& rho) {
    if (rho.rows() == 2) {
        const double a = rho(0, 0).real(), d = rho(1, 1).real();
        const double h = 0.5 * (a - d);
        return 0.5 * (a + d) - std::sqrt(h * h + std::norm(rho(0, 1)));
    }
    return min_eigenvalue(rho);
}

double draw_dw(const TrajectoryStream& s, std::uint64_t step, std::uint32_t lane, int which, NoiseMode mode,
               double sdt) {
    if (mode == NoiseMode::two_point) {
        return s.uniforms(step, lane)[which] < 0.5 ? -sdt : sdt;
    }
    return sdt * s.normals(step, lane)[which];
}

bool is_bath(const QuantumScenario& sc) { return !sc.model.bath.is_white_vacuum(); }

void rk4_feedback(const OpenSystemModel& model, const Operator& F, DensityMatrix& rho, double dt) {
    const Operator k1 = feedback_me_rhs(rho, model, F);
    const Operator k2 = feedback_me_rhs(rho + 0.5 * dt * k1, model, F);
    const Operator k3 = feedback_me_rhs(rho + 0.5 * dt * k2, model, F);
    const Operator k4 = feedback_me_rhs(rho + dt * k3, model, F);
    rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

void EnsembleSpec::validate() const {
    if (n_traj < 1) throw ModelError("n_traj must be >= 1");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ModelError("dt must be > 0");
    if (!(t_final >= dt) || !std::isfinite(t_final)) throw ModelError("t_final must be >= dt");
    if (stride < 1) throw ModelError("stride must be >= 1");
    if (!(positivity_tol >= 0.0)) throw ModelError("positivity_tol must be >= 0");
    (void)TimeGrid::from_final(dt, t_final);
}

void QuantumScenario::validate() const {
    model.validate();
    require_same_dim(model.H, rho0, "initial state");
    const StateDiagnostics diag = validate_state(rho0);
    if (!diag.valid()) throw ModelError("initial state is not a density matrix");
    for (const auto& ob : observables) require_same_dim(model.H, ob.op, ob.name.c_str());
    if (unravelling != Unravelling::none && model.channels.empty()) {
        throw ModelError("an unravelling needs at least one channel");
    }
    if (feedback) {
        require_same_dim(model.H, *feedback, "feedback operator");
        if (!is_hermitian(*feedback, kDefaultTolerances.hermiticity)) {
            throw ModelError("feedback operator F is not Hermitian");
        }
    }
    switch (unravelling) {
    case Unravelling::none:
        if (feedback) throw ModelError("feedback requires a monitored unravelling");
        if (linear) throw ModelError("linear trajectories require an unravelling");
        break;
    case Unravelling::jump:
        if (is_bath(*this)) throw ModelError("photodetection requires a vacuum bath (a coherent drive is allowed)");
        if (feedback && model.eta != 1.0) throw ModelError("jump feedback requires eta = 1");
        if (linear && !(beta > 0.0)) throw ModelError("linear jump trajectories need beta > 0");
        break;
    case Unravelling::homodyne:
        if (feedback && (scheme != Scheme::euler || linear)) {
            throw ModelError("homodyne feedback is only available with the nonlinear euler scheme");
        }
        if (feedback && !(model.eta > 0.0)) throw ModelError("homodyne feedback requires eta > 0");
        if (is_bath(*this) && (scheme != Scheme::euler || linear || feedback)) {
            throw ModelError("squeezed/thermal bath homodyne is only available with the nonlinear euler scheme");
        }
        break;
    case Unravelling::heterodyne:
        if (scheme != Scheme::euler || linear || feedback) {
            throw ModelError("heterodyne is only available with the nonlinear euler scheme and no feedback");
        }
        break;
    }
    if (is_bath(*this) && unravelling != Unravelling::none) {
        if (model.eta != 1.0) throw ModelError("squeezed/thermal bath unravellings require eta = 1");
        if (model.theta != 0.0) throw ModelError("squeezed/thermal bath unravellings require theta = 0");
        if (model.bath.M.imag() != 0.0) throw ModelError("squeezed bath unravellings require a real M");
        if (unravelling == Unravelling::heterodyne && model.bath.M != cplx{}) {
            throw ModelError("bath heterodyne requires M = 0");
        }
    }
}

void GaussianScenario::validate() const {
    model.validate();
    const Eigen::Index n = model.dim();
    if (initial.r.size() != n || initial.sigma.rows() != n || initial.sigma.cols() != n) {
        throw DimensionError("initial Gaussian state has the wrong dimension");
    }
    if (!is_physical_covariance(initial.sigma)) throw ModelError("initial covariance violates sigma + i Omega >= 0");
    for (const auto& ob : observables) {
        if (ob.i < 0 || ob.i >= n || ob.j < 0 || ob.j >= n) {
            throw DimensionError("observable " + ob.name + " indexes outside phase space");
        }
    }
    if (const auto* sf = std::get_if<StateFeedback>(&control)) {
        if (sf->F.rows() != n || sf->K.cols() != n || sf->F.cols() != sf->K.rows()) {
            throw DimensionError("state feedback needs F (2n x k) and K (k x 2n)");
        }
    } else if (const auto* cf = std::get_if<CurrentFeedback>(&control)) {
        if (cf->F.rows() != n || cf->M.cols() != model.outputs() || cf->F.cols() != cf->M.rows()) {
            throw DimensionError("current feedback needs F (2n x k) and M (k x m)");
        }
    }
}

std::size_t EnsembleStats::index_of(const std::string& name) const {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw std::out_of_range("no observable named " + name);
    return static_cast<std::size_t>(it - names.begin());
}

std::vector<std::size_t> record_steps(const EnsembleSpec& spec) {
    const TimeGrid grid = TimeGrid::from_final(spec.dt, spec.t_final);
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k <= grid.steps; k += spec.stride) out.push_back(k);
    if (out.back() != grid.steps) out.push_back(grid.steps);
    return out;
}

std::vector<std::vector<double>> me_reference(const EnsembleSpec& spec, const QuantumScenario& scenario) {
    spec.validate();
    scenario.validate();
    const TimeGrid grid = TimeGrid::from_final(spec.dt, spec.t_final);
    const std::vector<std::size_t> rec = record_steps(spec);
    std::vector<DensityMatrix> states;
    if (scenario.feedback && scenario.unravelling == Unravelling::homodyne) {
        DensityMatrix rho = scenario.rho0;
        std::size_t r = 0;
        for (std::size_t k = 0; k <= grid.steps; ++k) {
            if (r < rec.size() && rec[r] == k) {
                states.push_back(rho);
                ++r;
            }
            if (k < grid.steps) rk4_feedback(scenario.model, *scenario.feedback, rho, spec.dt);
        }
    } else {
        OpenSystemModel m = scenario.model;
        if (scenario.feedback) m = jump_feedback_model(m, JumpFeedback(*scenario.feedback));
        const std::vector<DensityMatrix> all = integrate_me(m, scenario.rho0, grid);
        for (std::size_t k : rec) states.push_back(all[k]);
    }
    std::vector<std::vector<double>> out(scenario.observables.size(), std::vector<double>(rec.size()));
    for (std::size_t o = 0; o < scenario.observables.size(); ++o) {
        for (std::size_t k = 0; k < rec.size(); ++k) {
            out[o][k] = expectation(states[k], scenario.observables[o].op).real();
        }
    }
    return out;
}

EnsembleStats run_ensemble(const EnsembleSpec& spec, const QuantumScenario& sc) {
    spec.validate();
    sc.validate();
    std::vector<std::string> names;
    for (const auto& ob : sc.observables) names.push_back(ob.name);

    if (sc.unravelling == Unravelling::none) {
        EnsembleStats st;
        st.names = names;
        for (std::size_t k : record_steps(spec)) st.times.push_back(static_cast<double>(k) * spec.dt);
        st.mean = me_reference(spec, sc);
        st.se.assign(names.size(), std::vector<double>(st.times.size(), 0.0));
        st.n_traj = 1;
        st.ess = 1.0;
        st.min_eigenvalue = min_eig(sc.rho0);
        return st;
    }

    const TimeGrid grid = TimeGrid::from_final(spec.dt, spec.t_final);
    const std::vector<std::size_t> rec = record_steps(spec);
    const double dt = spec.dt, sdt = std::sqrt(dt);
    const bool bath = is_bath(sc);

    std::optional<JumpStepper> js;
    std::optional<DiffusiveStepper> ds;
    if (sc.unravelling == Unravelling::jump) {
        const auto kind = sc.feedback ? JumpStepper::Kind::feedback
                          : sc.scheme == Scheme::kraus ? JumpStepper::Kind::kraus
                                                       : JumpStepper::Kind::sme;
        js.emplace(sc.model, dt, kind, sc.feedback ? *sc.feedback : Operator());
    } else {
        ds.emplace(sc.model, dt);
        if (sc.feedback) ds->set_feedback(*sc.feedback);
    }
    const LinearScheme lin = sc.scheme == Scheme::kraus ? LinearScheme::kraus : LinearScheme::euler;
    const double p_ost = sc.linear && js ? ostensible_jump_probability(sc.model, dt, sc.beta) : 0.0;
    const double y_shift =
        sc.linear && ds ? std::sqrt(sc.model.eta * sc.model.channels.front().rate) * sc.mu * dt : 0.0;
    const bool check_every_step = sc.rho0.rows() <= 2;

    auto trajectory = [&](std::size_t n) {
        const TrajectoryStream s(spec.seed, n);
        TrajectoryResult res;
        WeightedState w{sc.rho0, 0.0};
        std::size_t r = 0;
        auto record = [&](std::size_t k) {
            std::vector<double> v(sc.observables.size());
            const double wt = sc.linear ? w.weight() : 1.0;
            for (std::size_t o = 0; o < v.size(); ++o) v[o] = wt * expectation(w.rho, sc.observables[o].op).real();
            res.values.push_back(std::move(v));
            if (sc.linear) res.weights.push_back(wt);
            if (!check_every_step) {
                const double e = min_eig(w.rho);
                res.min_eig = std::min(res.min_eig, e);
                if (e < -spec.positivity_tol) ++res.violations;
            }
            (void)k;
        };
        for (std::size_t k = 0; k <= grid.steps; ++k) {
            if (r < rec.size() && rec[r] == k) {
                record(k);
                ++r;
            }
            if (k == grid.steps) break;
            try {
                if (js) {
                    const double u = s.uniforms(k)[0];
                    if (sc.linear) {
                        w = js->linear(w, u < p_ost ? 1 : 0, sc.beta, lin);
                    } else {
                        w.rho = js->step(w.rho, u).rho;
                    }
                } else if (sc.unravelling == Unravelling::homodyne) {
                    const double dw = draw_dw(s, k, 0, 0, spec.noise, sdt);
                    if (bath) {
                        w.rho = ds->bath_homodyne(w.rho, dw).rho;
                    } else if (sc.feedback) {
                        w.rho = ds->feedback(w.rho, dw).rho;
                    } else if (sc.linear) {
                        w = ds->linear(w, y_shift + dw, sc.mu, lin);
                    } else if (sc.scheme == Scheme::kraus) {
                        w.rho = ds->kraus(w.rho, dw).rho;
                    } else {
                        w.rho = ds->sme(w.rho, dw).rho;
                    }
                } else {
                    const double dw1 = draw_dw(s, k, 0, 0, spec.noise, sdt);
                    const double dw2 = draw_dw(s, k, 0, 1, spec.noise, sdt);
                    w.rho = bath ? ds->bath_heterodyne(w.rho, dw1, dw2).rho : ds->heterodyne(w.rho, dw1, dw2).rho;
                }
            } catch (const StepError& e) {
                throw PhysicalityViolation(std::string(e.what()) + " in trajectory " + std::to_string(n), k);
            }
            // log_weight = -inf is a zero-weight linear trajectory
            if (!w.rho.allFinite() || std::isnan(w.log_weight) || w.log_weight == std::numeric_limits<double>::infinity()) {
                throw PhysicalityViolation("non-finite state in trajectory " + std::to_string(n), k);
            }
            if (check_every_step) {
                const double e = min_eig(w.rho);
                res.min_eig = std::min(res.min_eig, e);
                if (e < -spec.positivity_tol) ++res.violations;
            }
        }
        return res;
    };
    return run_blocks(spec, names, sc.linear, trajectory);
}

EnsembleStats run_ensemble(const EnsembleSpec& spec, const GaussianScenario& sc) {
    spec.validate();
    sc.validate();
    std::vector<std::string> names;
    for (const auto& ob : sc.observables) names.push_back(ob.name);
    const TimeGrid grid = TimeGrid::from_final(spec.dt, spec.t_final);
    const std::vector<std::size_t> rec = record_steps(spec);
    const double sdt = std::sqrt(spec.dt);
    const Eigen::Index m = sc.model.outputs();
    const Eigen::MatrixXcd omega = kI * symplectic_form(sc.model.n_modes).cast<cplx>();

    auto value = [&](const GaussianObservable& ob, const GaussianState& g) {
        switch (ob.kind) {
        case MomentKind::mean: return g.r(ob.i);
        case MomentKind::excess: return 2.0 * g.r(ob.i) * g.r(ob.j);
        case MomentKind::sigma_c: return g.sigma(ob.i, ob.j);
        case MomentKind::sigma_unc: return g.sigma(ob.i, ob.j) + 2.0 * g.r(ob.i) * g.r(ob.j);
        }
        return 0.0;
    };

    auto trajectory = [&](std::size_t n) {
        const TrajectoryStream s(spec.seed, n);
        TrajectoryResult res;
        GaussianState g = sc.initial;
        RealVector dw(m);
        std::size_t r = 0;
        for (std::size_t k = 0; k <= grid.steps; ++k) {
            if (r < rec.size() && rec[r] == k) {
                std::vector<double> v(sc.observables.size());
                for (std::size_t o = 0; o < v.size(); ++o) v[o] = value(sc.observables[o], g);
                res.values.push_back(std::move(v));
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(g.sigma.cast<cplx>() + omega,
                                                                    Eigen::EigenvaluesOnly);
                const double e = es.eigenvalues().minCoeff();
                res.min_eig = std::min(res.min_eig, e);
                if (e < -spec.positivity_tol) ++res.violations;
                ++r;
            }
            if (k == grid.steps) break;
            for (Eigen::Index j = 0; j < m; ++j) {
                dw(j) = draw_dw(s, k, static_cast<std::uint32_t>(j / 2), static_cast<int>(j % 2), spec.noise, sdt);
            }
            g = conditional_step(g, sc.model, spec.dt, dw, sc.control).state;
            if (!g.r.allFinite() || !g.sigma.allFinite()) {
                throw PhysicalityViolation("non-finite Gaussian moments in trajectory " + std::to_string(n), k);
            }
        }
        return res;
    };
    return run_blocks(spec, names, false, trajectory);
}

namespace {

ComparisonReport compare(const EnsembleStats& a, const std::vector<std::vector<double>>& ref,
                         const std::vector<std::vector<double>>* se_b, double threshold) {
    if (ref.size() != a.mean.size()) throw DimensionError("compare: observable count mismatch");
    ComparisonReport rep;
    rep.threshold = threshold;
    rep.z.resize(ref.size());
    for (std::size_t o = 0; o < ref.size(); ++o) {
        if (ref[o].size() != a.mean[o].size()) throw DimensionError("compare: time grids differ");
        rep.z[o].resize(ref[o].size());
        for (std::size_t k = 0; k < ref[o].size(); ++k) {
            double se2 = a.se[o][k] * a.se[o][k];
            if (se_b) se2 += (*se_b)[o][k] * (*se_b)[o][k];
            const double diff = a.mean[o][k] - ref[o][k];
            double z;
            if (se2 > 0.0) {
                z = diff / std::sqrt(se2);
            } else {
                z = std::abs(diff) <= 1e-12 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
            }
            rep.z[o][k] = z;
            if (std::abs(z) > rep.max_abs_z) {
                rep.max_abs_z = std::abs(z);
                rep.worst_observable = o;
                rep.worst_time_index = k;
            }
        }
    }
    rep.pass = rep.max_abs_z <= threshold;
    return rep;
}

}  // namespace

ComparisonReport compare_to_me(const EnsembleStats& stats, const std::vector<std::vector<double>>& reference,
                               double threshold) {
    return compare(stats, reference, nullptr, threshold);
}

ComparisonReport compare_stats(const EnsembleStats& a, const EnsembleStats& b, double threshold) {
    if (a.times != b.times) throw DimensionError("compare_stats: time grids differ");
    return compare(a, b.mean, &b.se, threshold);
}

}  // namespace qmon
