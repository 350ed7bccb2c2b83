#include "qmon/config.hpp"

#include <cmath>
#include <set>
#include <utility>

#include "json.hpp"
#include "qmon/scenario.hpp"

namespace qmon {

using json = nlohmann::json;

namespace {

using Issues = std::vector<ConfigIssue>;

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Reads one JSON object, recording type errors and keys nobody asked for.
class Obj {
public:
    Obj(const json* j, std::string path, Issues& issues) : j_(j), path_(std::move(path)), issues_(issues) {
        if (j_ && !j_->is_object()) {
            issues_.push_back({path_, "type", "expected an object"});
            j_ = nullptr;
        }
    }
    Obj(const Obj&) = delete;
    ~Obj() {
        if (!j_) return;
        for (const auto& [k, v] : j_->items()) {
            if (!seen_.count(k)) issues_.push_back({join(path_, k), "unknown-key", "unknown key"});
        }
    }

    bool has(const char* key) const { return j_ && j_->contains(key); }

    const json* get(const char* key) {
        seen_.insert(key);
        if (!j_) return nullptr;
        auto it = j_->find(key);
        return it == j_->end() ? nullptr : &*it;
    }

    std::string path(const char* key) const { return join(path_, key); }

    double number(const char* key, double def) {
        const json* v = get(key);
        if (!v) return def;
        if (!v->is_number()) {
            issues_.push_back({path(key), "type", "expected a number"});
            return def;
        }
        return v->get<double>();
    }

    std::int64_t integer(const char* key, std::int64_t def) {
        const json* v = get(key);
        if (!v) return def;
        if (!v->is_number_integer()) {
            issues_.push_back({path(key), "type", "expected an integer"});
            return def;
        }
        return v->get<std::int64_t>();
    }

    std::uint64_t unsigned_integer(const char* key, std::uint64_t def) {
        const json* v = get(key);
        if (!v) return def;
        if (!v->is_number_unsigned()) {
            issues_.push_back({path(key), "type", "expected a non-negative integer"});
            return def;
        }
        return v->get<std::uint64_t>();
    }

    bool boolean(const char* key, bool def) {
        const json* v = get(key);
        if (!v) return def;
        if (!v->is_boolean()) {
            issues_.push_back({path(key), "type", "expected true or false"});
            return def;
        }
        return v->get<bool>();
    }

    std::string string(const char* key, const std::string& def) {
        const json* v = get(key);
        if (!v) return def;
        if (!v->is_string()) {
            issues_.push_back({path(key), "type", "expected a string"});
            return def;
        }
        return v->get<std::string>();
    }

    template <class E>
    E choice(const char* key, E def, const std::vector<std::pair<std::string, E>>& options) {
        const json* v = get(key);
        if (!v) return def;
        std::string allowed;
        for (const auto& [name, val] : options) {
            if (v->is_string() && v->get<std::string>() == name) return val;
            allowed += (allowed.empty() ? "" : ", ") + name;
        }
        issues_.push_back({path(key), "enum", "expected one of: " + allowed});
        return def;
    }

    Issues& issues() { return issues_; }

private:
    const json* j_;
    std::string path_;
    Issues& issues_;
    std::set<std::string> seen_;
};

const std::vector<std::pair<std::string, SystemType>> kSystems = {
    {"qubit", SystemType::qubit}, {"boson", SystemType::boson}, {"gaussian", SystemType::gaussian}};
const std::vector<std::pair<std::string, Unravelling>> kUnravellings = {{"none", Unravelling::none},
                                                                        {"jump", Unravelling::jump},
                                                                        {"homodyne", Unravelling::homodyne},
                                                                        {"heterodyne", Unravelling::heterodyne}};
const std::vector<std::pair<std::string, Scheme>> kSchemes = {{"euler", Scheme::euler}, {"kraus", Scheme::kraus}};
const std::vector<std::pair<std::string, FeedbackType>> kFeedback = {
    {"none", FeedbackType::none}, {"markovian", FeedbackType::markovian}, {"lqg", FeedbackType::lqg}};
const std::vector<std::pair<std::string, NoiseMode>> kNoise = {{"gaussian", NoiseMode::gaussian},
                                                               {"two_point", NoiseMode::two_point}};
const std::vector<std::pair<std::string, MomentKind>> kMoments = {{"mean", MomentKind::mean},
                                                                  {"excess", MomentKind::excess},
                                                                  {"sigma_c", MomentKind::sigma_c},
                                                                  {"sigma_unc", MomentKind::sigma_unc}};

template <class E>
std::string name_of(E value, const std::vector<std::pair<std::string, E>>& options) {
    for (const auto& [name, val] : options) {
        if (val == value) return name;
    }
    return "?";
}

// number or [re, im]
bool read_complex(const json& v, double& re, double& im) {
    if (v.is_number()) {
        re = v.get<double>();
        im = 0.0;
        return true;
    }
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
        re = v[0].get<double>();
        im = v[1].get<double>();
        return true;
    }
    return false;
}

json write_complex(double re, double im) { return im == 0.0 ? json(re) : json::array({re, im}); }

OperatorExpr read_expr(const json* v, const std::string& path, Issues& issues) {
    OperatorExpr out;
    if (!v) return out;
    if (v->is_string()) {
        out.push_back({v->get<std::string>(), 1.0, 0.0});
        return out;
    }
    if (!v->is_array()) {
        issues.push_back({path, "type", "expected an operator name or a list of {op, coeff} terms"});
        return out;
    }
    for (std::size_t i = 0; i < v->size(); ++i) {
        Obj t(&(*v)[i], path + "[" + std::to_string(i) + "]", issues);
        Term term;
        term.op = t.string("op", "");
        if (term.op.empty()) issues.push_back({t.path("op"), "required", "missing operator name"});
        if (const json* c = t.get("coeff")) {
            if (!read_complex(*c, term.re, term.im)) {
                issues.push_back({t.path("coeff"), "type", "expected a number or [re, im]"});
            }
        }
        out.push_back(term);
    }
    return out;
}

json write_expr(const OperatorExpr& e) {
    json arr = json::array();
    for (const auto& t : e) arr.push_back({{"op", t.op}, {"coeff", write_complex(t.re, t.im)}});
    return arr;
}

Matrix read_matrix(const json* v, const std::string& path, Issues& issues) {
    Matrix m;
    if (!v) return m;
    bool ok = v->is_array();
    if (ok) {
        for (const auto& row : *v) {
            if (!row.is_array()) {
                ok = false;
                break;
            }
            std::vector<double> r;
            for (const auto& x : row) {
                if (!x.is_number()) ok = false;
                else r.push_back(x.get<double>());
            }
            if (!m.empty() && r.size() != m.front().size()) ok = false;
            m.push_back(r);
        }
    }
    if (!ok) {
        issues.push_back({path, "type", "expected a rectangular list of numeric rows"});
        return {};
    }
    return m;
}

std::vector<double> read_vector(const json* v, const std::string& path, Issues& issues) {
    std::vector<double> out;
    if (!v) return out;
    if (!v->is_array()) {
        issues.push_back({path, "type", "expected a list of numbers"});
        return out;
    }
    for (const auto& x : *v) {
        if (!x.is_number()) {
            issues.push_back({path, "type", "expected a list of numbers"});
            return {};
        }
        out.push_back(x.get<double>());
    }
    return out;
}

void check_finite(double x, const std::string& path, Issues& issues) {
    if (!std::isfinite(x)) issues.push_back({path, "finite", "value must be finite"});
}

ScenarioConfig read_config(const json& root, Issues& issues) {
    ScenarioConfig c;
    Obj top(&root, "", issues);
    c.schema = static_cast<int>(top.integer("schema", -1));
    if (c.schema != kSchemaVersion) {
        issues.push_back({"schema", "schema-version",
                          "schema must be " + std::to_string(kSchemaVersion) + " (got " + std::to_string(c.schema) + ")"});
    }

    {
        Obj s(top.get("system"), "system", issues);
        c.system.kind = s.choice("kind", SystemType::qubit, kSystems);
        c.system.dim = static_cast<int>(s.integer("dim", c.system.kind == SystemType::boson ? 10 : 2));
        c.system.n_modes = static_cast<int>(s.integer("n_modes", 1));
    }
    const bool gaussian = c.system.kind == SystemType::gaussian;

    {
        Obj m(top.get("model"), "model", issues);
        c.model.eta = m.number("eta", 1.0);
        c.model.theta = m.number("theta", 0.0);
        auto reject = [&](const char* key, const char* why) {
            if (m.has(key)) issues.push_back({m.path(key), "system-mismatch", why});
            m.get(key);
        };
        if (gaussian) {
            for (const char* k : {"hamiltonian", "channels", "bath"}) reject(k, "not used by gaussian systems");
            if (m.has("opo")) {
                c.model.has_opo = true;
                Obj o(m.get("opo"), "model.opo", issues);
                c.model.opo.chi = o.number("chi", 0.0);
                c.model.opo.kappa = o.number("kappa", 1.0);
                for (const char* k : {"A", "D", "B", "E"}) reject(k, "give either opo or explicit matrices");
            } else {
                m.get("opo");
                c.model.A = read_matrix(m.get("A"), "model.A", issues);
                c.model.D = read_matrix(m.get("D"), "model.D", issues);
                c.model.B = read_matrix(m.get("B"), "model.B", issues);
                c.model.E = read_matrix(m.get("E"), "model.E", issues);
            }
        } else {
            for (const char* k : {"opo", "A", "D", "B", "E"}) reject(k, "only used by gaussian systems");
            c.model.hamiltonian = read_expr(m.get("hamiltonian"), "model.hamiltonian", issues);
            if (const json* ch = m.get("channels")) {
                if (!ch->is_array()) {
                    issues.push_back({"model.channels", "type", "expected a list of channels"});
                } else {
                    for (std::size_t i = 0; i < ch->size(); ++i) {
                        const std::string p = "model.channels[" + std::to_string(i) + "]";
                        Obj o(&(*ch)[i], p, issues);
                        ChannelConfig cc;
                        cc.op = read_expr(o.get("op"), p + ".op", issues);
                        if (cc.op.empty()) issues.push_back({p + ".op", "required", "missing channel operator"});
                        cc.rate = o.number("rate", 1.0);
                        c.model.channels.push_back(cc);
                    }
                }
            }
            if (m.has("bath")) {
                Obj b(m.get("bath"), "model.bath", issues);
                c.model.bath.N = b.number("N", 0.0);
                if (const json* v = b.get("M"); v && !read_complex(*v, c.model.bath.M_re, c.model.bath.M_im)) {
                    issues.push_back({"model.bath.M", "type", "expected a number or [re, im]"});
                }
                if (const json* v = b.get("beta"); v && !read_complex(*v, c.model.bath.beta_re, c.model.bath.beta_im)) {
                    issues.push_back({"model.bath.beta", "type", "expected a number or [re, im]"});
                }
            } else {
                m.get("bath");
            }
        }
    }

    {
        Obj in(top.get("initial"), "initial", issues);
        if (gaussian) {
            if (in.has("basis")) issues.push_back({"initial.basis", "system-mismatch", "not used by gaussian systems"});
            in.get("basis");
            c.initial.r = read_vector(in.get("r"), "initial.r", issues);
            c.initial.sigma = read_matrix(in.get("sigma"), "initial.sigma", issues);
        } else {
            for (const char* k : {"r", "sigma"}) {
                if (in.has(k)) issues.push_back({in.path(k), "system-mismatch", "only used by gaussian systems"});
                in.get(k);
            }
            c.initial.basis = static_cast<int>(in.integer("basis", 0));
        }
    }

    {
        Obj u(top.get("unravelling"), "unravelling", issues);
        c.unravelling.type = u.choice("type", Unravelling::none, kUnravellings);
        c.unravelling.scheme = u.choice("scheme", Scheme::euler, kSchemes);
        c.unravelling.linear = u.boolean("linear", false);
        c.unravelling.beta = u.number("beta", 1.0);
        c.unravelling.mu = u.number("mu", 0.0);
    }

    {
        Obj f(top.get("feedback"), "feedback", issues);
        c.feedback.type = f.choice("type", FeedbackType::none, kFeedback);
        if (gaussian) {
            c.feedback.F = read_matrix(f.get("F"), "feedback.F", issues);
            c.feedback.M = read_matrix(f.get("M"), "feedback.M", issues);
            c.feedback.P = read_matrix(f.get("P"), "feedback.P", issues);
            c.feedback.Q = read_matrix(f.get("Q"), "feedback.Q", issues);
        } else {
            c.feedback.F_op = read_expr(f.get("F"), "feedback.F", issues);
            for (const char* k : {"M", "P", "Q"}) {
                if (f.has(k)) issues.push_back({f.path(k), "system-mismatch", "only used by gaussian systems"});
                f.get(k);
            }
        }
    }

    {
        Obj r(top.get("run"), "run", issues);
        c.run.dt = r.number("dt", c.run.dt);
        c.run.t_final = r.number("t_final", c.run.t_final);
        const std::int64_t n = r.integer("n_traj", 1);
        if (n < 1) issues.push_back({"run.n_traj", "n-traj", "n_traj must be >= 1"});
        c.run.n_traj = n < 1 ? 1 : static_cast<std::size_t>(n);
        c.run.seed = r.unsigned_integer("seed", 0);
        const std::int64_t s = r.integer("stride", 1);
        if (s < 1) issues.push_back({"run.stride", "stride", "stride must be >= 1"});
        c.run.stride = s < 1 ? 1 : static_cast<std::size_t>(s);
        c.run.noise = r.choice("noise", NoiseMode::gaussian, kNoise);
    }

    {
        Obj o(top.get("output"), "output", issues);
        c.output.directory = o.string("directory", c.output.directory);
        c.output.trajectories = o.boolean("trajectories", false);
        if (const json* obs = o.get("observables")) {
            if (!obs->is_array()) {
                issues.push_back({"output.observables", "type", "expected a list of observables"});
            } else {
                for (std::size_t i = 0; i < obs->size(); ++i) {
                    const std::string p = "output.observables[" + std::to_string(i) + "]";
                    Obj ob(&(*obs)[i], p, issues);
                    ObservableConfig oc;
                    oc.name = ob.string("name", "");
                    if (gaussian) {
                        oc.kind = ob.choice("kind", MomentKind::mean, kMoments);
                        oc.i = static_cast<int>(ob.integer("i", 0));
                        oc.j = static_cast<int>(ob.integer("j", oc.i));
                        if (ob.has("op")) issues.push_back({p + ".op", "system-mismatch", "gaussian observables use kind/i/j"});
                        ob.get("op");
                    } else {
                        oc.op = read_expr(ob.get("op"), p + ".op", issues);
                        if (oc.op.empty()) issues.push_back({p + ".op", "required", "missing observable operator"});
                        for (const char* k : {"kind", "i", "j"}) {
                            if (ob.has(k)) issues.push_back({ob.path(k), "system-mismatch", "only used by gaussian systems"});
                            ob.get(k);
                        }
                    }
                    c.output.observables.push_back(oc);
                }
            }
        }
    }
    return c;
}

// Rules that can be checked on the plain values.
void check_rules(const ScenarioConfig& c, Issues& issues) {
    const bool gaussian = c.system.kind == SystemType::gaussian;
    if (c.system.kind == SystemType::qubit && c.system.dim != 2) {
        issues.push_back({"system.dim", "qubit-dim", "a qubit has dim 2"});
    }
    if (c.system.kind == SystemType::boson && (c.system.dim < 2 || c.system.dim > kMaxSuperoperatorDim)) {
        issues.push_back({"system.dim", "boson-dim", "boson dim must be in [2, 64]"});
    }
    if (gaussian && (c.system.n_modes < 1 || c.system.n_modes > 8)) {
        issues.push_back({"system.n_modes", "n-modes", "n_modes must be in [1, 8]"});
    }

    check_finite(c.model.eta, "model.eta", issues);
    if (!(c.model.eta >= 0.0 && c.model.eta <= 1.0)) {
        issues.push_back({"model.eta", "efficiency-range", "efficiency out of [0,1]"});
    }
    check_finite(c.model.theta, "model.theta", issues);
    for (std::size_t i = 0; i < c.model.channels.size(); ++i) {
        if (!(c.model.channels[i].rate >= 0.0) || !std::isfinite(c.model.channels[i].rate)) {
            issues.push_back({"model.channels[" + std::to_string(i) + "].rate", "rate", "rate must be finite and >= 0"});
        }
    }
    const BathConfig& b = c.model.bath;
    if (!(b.N >= 0.0) || !std::isfinite(b.N)) issues.push_back({"model.bath.N", "bath-N", "N must be >= 0"});
    if (b.M_re * b.M_re + b.M_im * b.M_im > b.N * (b.N + 1.0) * (1.0 + 1e-12) + 1e-15) {
        issues.push_back({"model.bath.M", "bath-physical", "unphysical bath: |M|^2 > N(N+1)"});
    }
    if (gaussian && c.model.has_opo) {
        if (!(c.model.opo.kappa > 0.0)) issues.push_back({"model.opo.kappa", "opo-kappa", "kappa must be > 0"});
        check_finite(c.model.opo.chi, "model.opo.chi", issues);
    }

    check_finite(c.run.dt, "run.dt", issues);
    if (!(c.run.dt > 0.0)) issues.push_back({"run.dt", "dt", "dt must be > 0"});
    if (!(c.run.t_final >= c.run.dt) || !std::isfinite(c.run.t_final)) {
        issues.push_back({"run.t_final", "t-final", "t_final must be >= dt"});
    }

    const Unravelling u = c.unravelling.type;
    if (c.feedback.type == FeedbackType::lqg && !gaussian) {
        issues.push_back({"feedback.type", "lqg-system", "lqg feedback requires a gaussian system"});
    }
    if (c.feedback.type != FeedbackType::none) {
        if (u == Unravelling::none) {
            issues.push_back({"feedback.type", "feedback-measurement", "feedback requires a monitored unravelling"});
        }
        if (!gaussian && c.feedback.F_op.empty()) {
            issues.push_back({"feedback.F", "required", "feedback needs an operator F"});
        }
        if (gaussian && c.feedback.F.empty()) issues.push_back({"feedback.F", "required", "feedback needs a matrix F"});
        if (c.feedback.type == FeedbackType::lqg && (c.feedback.P.empty() || c.feedback.Q.empty())) {
            issues.push_back({"feedback", "required", "lqg feedback needs P and Q"});
        }
    }
    if (!gaussian && u == Unravelling::jump && c.feedback.type == FeedbackType::markovian && c.model.eta != 1.0) {
        issues.push_back({"model.eta", "jump-feedback-efficiency", "jump feedback requires eta = 1"});
    }
    if (gaussian && (u == Unravelling::jump || u == Unravelling::heterodyne)) {
        issues.push_back({"unravelling.type", "gaussian-unravelling",
                          "gaussian systems support unravelling none (unconditional) or homodyne (conditional)"});
    }
    if (gaussian && (c.unravelling.linear || c.unravelling.scheme != Scheme::euler)) {
        issues.push_back({"unravelling", "gaussian-unravelling", "gaussian systems use the euler conditional update"});
    }
    if (gaussian && u == Unravelling::none) {
        for (std::size_t i = 0; i < c.output.observables.size(); ++i) {
            const MomentKind k = c.output.observables[i].kind;
            if (k == MomentKind::excess || k == MomentKind::sigma_c) {
                issues.push_back({"output.observables[" + std::to_string(i) + "].kind", "unconditional-moment",
                                  "unconditional runs only provide mean and sigma_unc"});
            }
        }
    }

    std::set<std::string> names;
    for (std::size_t i = 0; i < c.output.observables.size(); ++i) {
        const std::string& n = c.output.observables[i].name;
        const std::string p = "output.observables[" + std::to_string(i) + "].name";
        if (n.empty() || n.find_first_of(",\"\n") != std::string::npos) {
            issues.push_back({p, "observable-name", "name must be non-empty without commas or quotes"});
        } else if (!names.insert(n).second) {
            issues.push_back({p, "observable-name", "duplicate observable name " + n});
        }
    }
}

json to_json(const ScenarioConfig& c) {
    const bool gaussian = c.system.kind == SystemType::gaussian;
    json j;
    j["schema"] = c.schema;
    j["system"] = {{"kind", name_of(c.system.kind, kSystems)}, {"dim", c.system.dim}, {"n_modes", c.system.n_modes}};

    json m;
    m["eta"] = c.model.eta;
    m["theta"] = c.model.theta;
    if (gaussian) {
        if (c.model.has_opo) {
            m["opo"] = {{"chi", c.model.opo.chi}, {"kappa", c.model.opo.kappa}};
        } else {
            m["A"] = c.model.A;
            m["D"] = c.model.D;
            m["B"] = c.model.B;
            m["E"] = c.model.E;
        }
    } else {
        m["hamiltonian"] = write_expr(c.model.hamiltonian);
        json ch = json::array();
        for (const auto& cc : c.model.channels) ch.push_back({{"op", write_expr(cc.op)}, {"rate", cc.rate}});
        m["channels"] = ch;
        m["bath"] = {{"N", c.model.bath.N},
                     {"M", write_complex(c.model.bath.M_re, c.model.bath.M_im)},
                     {"beta", write_complex(c.model.bath.beta_re, c.model.bath.beta_im)}};
    }
    j["model"] = m;

    if (gaussian) {
        j["initial"] = json::object();
        if (!c.initial.r.empty()) j["initial"]["r"] = c.initial.r;
        if (!c.initial.sigma.empty()) j["initial"]["sigma"] = c.initial.sigma;
    } else {
        j["initial"] = {{"basis", c.initial.basis}};
    }

    j["unravelling"] = {{"type", name_of(c.unravelling.type, kUnravellings)},
                        {"scheme", name_of(c.unravelling.scheme, kSchemes)},
                        {"linear", c.unravelling.linear},
                        {"beta", c.unravelling.beta},
                        {"mu", c.unravelling.mu}};

    json f = {{"type", name_of(c.feedback.type, kFeedback)}};
    if (gaussian) {
        if (!c.feedback.F.empty()) f["F"] = c.feedback.F;
        if (!c.feedback.M.empty()) f["M"] = c.feedback.M;
        if (!c.feedback.P.empty()) f["P"] = c.feedback.P;
        if (!c.feedback.Q.empty()) f["Q"] = c.feedback.Q;
    } else if (!c.feedback.F_op.empty()) {
        f["F"] = write_expr(c.feedback.F_op);
    }
    j["feedback"] = f;

    j["run"] = {{"dt", c.run.dt},         {"t_final", c.run.t_final}, {"n_traj", c.run.n_traj},
                {"seed", c.run.seed},     {"stride", c.run.stride},   {"noise", name_of(c.run.noise, kNoise)}};

    json obs = json::array();
    for (const auto& o : c.output.observables) {
        if (gaussian) {
            obs.push_back({{"name", o.name}, {"kind", name_of(o.kind, kMoments)}, {"i", o.i}, {"j", o.j}});
        } else {
            obs.push_back({{"name", o.name}, {"op", write_expr(o.op)}});
        }
    }
    j["output"] = {{"directory", c.output.directory}, {"trajectories", c.output.trajectories}, {"observables", obs}};
    return j;
}

ScenarioConfig parse_json(const json& root) {
    Issues issues;
    ScenarioConfig c = read_config(root, issues);
    // unreadable fields fall back to defaults, so the value rules still apply
    check_rules(c, issues);
    if (issues.empty()) {
        // model-level checks need the assembled operators
        try {
            (void)build_scenario(c);
        } catch (const ConfigError& e) {
            issues = e.issues();
        }
    }
    if (!issues.empty()) throw ConfigError(std::move(issues));
    return c;
}

}  // namespace

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : std::invalid_argument([&] {
          std::string msg = "invalid configuration:";
          for (const auto& i : issues) msg += "\n  " + format_issue(i);
          return msg;
      }()),
      issues_(std::move(issues)) {}

std::string format_issue(const ConfigIssue& issue) {
    return (issue.path.empty() ? std::string("<root>") : issue.path) + ": " + issue.message + " [" + issue.rule + "]";
}

ScenarioConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError({{"", "json", std::string("malformed JSON: ") + e.what()}});
    }
    return parse_json(root);
}

std::string serialize_config(const ScenarioConfig& config) { return to_json(config).dump(2) + "\n"; }

ScenarioConfig apply_overrides(const ScenarioConfig& config, const std::vector<std::string>& overrides) {
    json j = to_json(config);
    Issues issues;
    for (const auto& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos || eq == 0) {
            issues.push_back({ov, "override", "expected key=value"});
            continue;
        }
        const std::string key = ov.substr(0, eq), text = ov.substr(eq + 1);
        json value = json::parse(text, nullptr, false);
        if (value.is_discarded()) value = text;
        json* node = &j;
        std::size_t start = 0;
        bool ok = true;
        for (;;) {
            const auto dot = key.find('.', start);
            const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
            if (part.empty() || !node->is_object()) {
                ok = false;
                break;
            }
            if (dot == std::string::npos) {
                (*node)[part] = value;
                break;
            }
            node = &(*node)[part];
            start = dot + 1;
        }
        if (!ok) issues.push_back({key, "override", "cannot set this key"});
    }
    if (!issues.empty()) throw ConfigError(std::move(issues));
    return parse_json(j);
}

}  // namespace qmon
