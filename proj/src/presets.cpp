#include "qmon/presets.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>

namespace qmon {

namespace {

ScenarioConfig qubit_base(const std::string& dir) {
    ScenarioConfig c;
    c.system.kind = SystemType::qubit;
    c.model.channels = {{{{"sm", 1.0, 0.0}}, 1.0}};
    c.initial.basis = 0;   // excited
    c.run.dt = 1e-3;
    c.run.t_final = 3.0;
    c.run.n_traj = 10000;
    c.run.seed = 20240611;
    c.run.stride = 10;
    c.output.directory = dir;
    c.output.observables = {{"rho_ee", {{"pe", 1.0, 0.0}}, MomentKind::mean, 0, 0},
                            {"sx", {{"sx", 1.0, 0.0}}, MomentKind::mean, 0, 0},
                            {"sz", {{"sz", 1.0, 0.0}}, MomentKind::mean, 0, 0}};
    return c;
}

ScenarioConfig opo_base(const std::string& dir) {
    ScenarioConfig c;
    c.system.kind = SystemType::gaussian;
    c.system.n_modes = 1;
    c.model.has_opo = true;
    c.model.opo = {0.2, 1.0};
    c.model.eta = 1.0;
    c.unravelling.type = Unravelling::homodyne;
    c.run.dt = 1e-3;
    c.run.t_final = 10.0;
    c.run.n_traj = 1000;
    c.run.seed = 20240611;
    c.run.stride = 100;
    c.output.directory = dir;
    c.output.observables = {{"q_mean", {}, MomentKind::mean, 0, 0},
                            {"sigma_c_qq", {}, MomentKind::sigma_c, 0, 0},
                            {"sigma_c_pp", {}, MomentKind::sigma_c, 1, 1},
                            {"excess_qq", {}, MomentKind::excess, 0, 0},
                            {"sigma_unc_qq", {}, MomentKind::sigma_unc, 0, 0}};
    return c;
}

struct Entry {
    PresetInfo info;
    std::function<ScenarioConfig()> make;
};

const std::vector<Entry>& catalog() {
    static const std::vector<Entry> entries = {
        {{"qubit_decay_me", "qubit spontaneous emission, Lindblad integration"},
         [] {
             ScenarioConfig c = qubit_base("out/qubit_decay_me");
             c.run.n_traj = 1;
             return c;
         }},
        {{"qubit_decay_jump", "qubit decay unravelled by photodetection"},
         [] {
             ScenarioConfig c = qubit_base("out/qubit_decay_jump");
             c.unravelling.type = Unravelling::jump;
             return c;
         }},
        {{"qubit_homodyne", "qubit decay unravelled by homodyne detection (Kraus stepper)"},
         [] {
             ScenarioConfig c = qubit_base("out/qubit_homodyne");
             c.unravelling.type = Unravelling::homodyne;
             c.unravelling.scheme = Scheme::kraus;
             return c;
         }},
        {{"qubit_pd_feedback", "photodetection with a unitary kick exp(-iF) after each click"},
         [] {
             ScenarioConfig c = qubit_base("out/qubit_pd_feedback");
             c.unravelling.type = Unravelling::jump;
             c.feedback.type = FeedbackType::markovian;
             c.feedback.F_op = {{"sx", std::numbers::pi / 4.0, 0.0}};
             return c;
         }},
        {{"qubit_homodyne_feedback", "homodyne current fed back as H_fb = I(t) F, eta = 0.8"},
         [] {
             ScenarioConfig c = qubit_base("out/qubit_homodyne_feedback");
             c.model.eta = 0.8;
             c.unravelling.type = Unravelling::homodyne;
             c.feedback.type = FeedbackType::markovian;
             c.feedback.F_op = {{"sy", 0.5, 0.0}};
             return c;
         }},
        {{"thermal_bath_homodyne", "qubit in a thermal bath (N = 1), homodyne unravelling"},
         [] {
             ScenarioConfig c = qubit_base("out/thermal_bath_homodyne");
             c.model.bath.N = 1.0;
             c.unravelling.type = Unravelling::homodyne;
             return c;
         }},
        {{"squeezed_vacuum_homodyne", "qubit in squeezed vacuum (N = 1, M = sqrt2), homodyne unravelling"},
         [] {
             ScenarioConfig c = qubit_base("out/squeezed_vacuum_homodyne");
             c.model.bath.N = 1.0;
             c.model.bath.M_re = std::sqrt(2.0);
             c.unravelling.type = Unravelling::homodyne;
             return c;
         }},
        {{"coherent_drive", "qubit driven through its bath by a coherent amplitude, homodyne Kraus stepper"},
         [] {
             ScenarioConfig c = qubit_base("out/coherent_drive");
             c.model.bath.beta_re = 0.5;
             c.initial.basis = 1;
             c.unravelling.type = Unravelling::homodyne;
             c.unravelling.scheme = Scheme::kraus;
             c.output.observables.push_back({"sy", {{"sy", 1.0, 0.0}}, MomentKind::mean, 0, 0});
             return c;
         }},
        {{"opo_unconditional", "degenerate parametric oscillator, unconditional moments"},
         [] {
             ScenarioConfig c = opo_base("out/opo_unconditional");
             c.unravelling.type = Unravelling::none;
             c.run.n_traj = 1;
             c.output.observables = {{"sigma_qq", {}, MomentKind::sigma_unc, 0, 0},
                                     {"sigma_pp", {}, MomentKind::sigma_unc, 1, 1}};
             return c;
         }},
        {{"opo_conditional", "parametric oscillator under homodyne monitoring of q"},
         [] { return opo_base("out/opo_conditional"); }},
        {{"opo_markovian_feedback", "optimal Markovian current feedback on the monitored oscillator"},
         [] {
             ScenarioConfig c = opo_base("out/opo_markovian_feedback");
             c.feedback.type = FeedbackType::markovian;
             c.feedback.F = {{1.0, 0.0}, {0.0, 1.0}};
             return c;
         }},
        {{"opo_lqg", "state-based LQG control, P = diag(1, 0), Q = q I (q = 1; override feedback.Q)"},
         [] {
             ScenarioConfig c = opo_base("out/opo_lqg");
             c.feedback.type = FeedbackType::lqg;
             c.feedback.F = {{1.0, 0.0}, {0.0, 1.0}};
             c.feedback.P = {{1.0, 0.0}, {0.0, 0.0}};
             c.feedback.Q = {{1.0, 0.0}, {0.0, 1.0}};
             return c;
         }},
    };
    return entries;
}

}  // namespace

std::vector<PresetInfo> list_presets() {
    std::vector<PresetInfo> out;
    for (const auto& e : catalog()) out.push_back(e.info);
    return out;
}

ScenarioConfig preset(const std::string& name) {
    for (const auto& e : catalog()) {
        if (e.info.name == name) return e.make();
    }
    throw std::out_of_range("unknown preset '" + name + "'");
}

}  // namespace qmon
