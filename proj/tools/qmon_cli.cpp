// qmon: run monitored open-quantum-system scenarios from JSON configs or presets.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "qmon/presets.hpp"
#include "qmon/scenario.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 2, kPhysics = 3, kIo = 4 };

std::string read_text(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw qmon::IoError("cannot read " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void report(const qmon::RunSummary& s) {
    std::printf("wrote %s (%zu trajectories, %.3f s)\n", s.output_dir.c_str(), s.stats.n_traj, s.wall_time_s);
    if (s.stats.positivity_violations > 0) {
        std::fprintf(stderr, "warning: %zu steps with negative eigenvalues (min %.3g)\n",
                     s.stats.positivity_violations, s.stats.min_eigenvalue);
    }
    if (s.stats.ess_warning) {
        std::fprintf(stderr, "warning: effective sample size %.1f is below 1%% of %zu trajectories\n", s.stats.ess,
                     s.stats.n_traj);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qmon: quantum trajectories, master equations and Gaussian feedback"};
    app.require_subcommand(1);
    app.fallthrough();

    unsigned threads = 0;
    std::uint64_t seed = 0;
    std::string output;
    app.add_option("--threads", threads, "worker threads (default: hardware count)");
    auto* seed_opt = app.add_option("--seed", seed, "override the master seed");
    auto* out_opt = app.add_option("--output", output, "override the output directory");

    std::string config_path;
    auto* run = app.add_subcommand("run", "run a config file or a manifest from a previous run");
    run->add_option("config", config_path, "config or manifest JSON")->required();

    std::string preset_name;
    std::vector<std::string> overrides;
    auto* pre = app.add_subcommand("preset", "run a named preset");
    pre->add_option("name", preset_name, "preset name")->required();
    pre->add_option("--override", overrides, "key=value, e.g. run.n_traj=100")->take_all();
    bool print_only = false;
    pre->add_flag("--print", print_only, "print the preset config instead of running it");

    auto* val = app.add_subcommand("validate", "check a config and list every problem");
    val->add_option("config", config_path, "config JSON")->required();

    auto* list = app.add_subcommand("list-presets", "list the preset catalog");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    qmon::RunOptions opts;
    opts.threads = threads;
    if (*seed_opt) opts.seed = seed;
    if (*out_opt) opts.output_dir = output;

    try {
        if (*list) {
            for (const auto& p : qmon::list_presets()) std::printf("%-26s %s\n", p.name.c_str(), p.description.c_str());
            return kOk;
        }
        if (*val) {
            const qmon::ScenarioConfig c = qmon::parse_config(read_text(config_path));
            std::printf("ok: %s\n", config_path.c_str());
            (void)c;
            return kOk;
        }
        qmon::ScenarioConfig cfg;
        if (*run) {
            cfg = qmon::load_config_or_manifest(read_text(config_path));
        } else {
            try {
                cfg = qmon::preset(preset_name);
            } catch (const std::out_of_range& e) {
                std::fprintf(stderr, "error: %s\n", e.what());
                return kConfig;
            }
            cfg = qmon::apply_overrides(cfg, overrides);
            if (print_only) {
                std::fputs(qmon::serialize_config(cfg).c_str(), stdout);
                return kOk;
            }
        }
        report(qmon::run_scenario(cfg, opts));
        return kOk;
    } catch (const qmon::ConfigError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return kConfig;
    } catch (const qmon::IoError& e) {
        std::fprintf(stderr, "I/O error: %s\n", e.what());
        return kIo;
    } catch (const qmon::PhysicalityViolation& e) {
        std::fprintf(stderr, "physicality violation: %s\n", e.what());
        return kPhysics;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "invalid input: %s\n", e.what());
        return kConfig;
    } catch (const std::runtime_error& e) {
        // StepError, StabilityError, ConvergenceError raised mid-run
        std::fprintf(stderr, "runtime failure: %s\n", e.what());
        return kPhysics;
    }
}
