#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "multiflock/scenario.hpp"

namespace {

// Accepts either a preset name or a config file path.
mflock::Scenario resolve(const std::string& what) {
    try {
        return mflock::find_preset(what);
    } catch (const std::invalid_argument&) {
        return mflock::load_scenario(what);
    }
}

int default_workers() {
    if (const char* env = std::getenv("MULTIFLOCK_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return 1;
}

struct Overrides {
    std::string out;
    std::uint64_t seed = 0;
    bool seed_set = false;
    double dt = 0, t_end = 0, rtol = 0, atol = 0;

    void apply(mflock::Scenario& s) const {
        if (!out.empty()) s.out_dir = out;
        if (seed_set) {
            s.seed = seed;
            s.seed_set = true;
        }
        if (dt > 0) {
            s.integrator.dt = dt;
            s.hydro_dt = dt;
        }
        if (t_end > 0) s.integrator.t_end = t_end;
        if (rtol > 0) s.integrator.rtol = rtol;
        if (atol > 0) s.integrator.atol = atol;
    }

    void attach(CLI::App* cmd) {
        cmd->add_option("--out", out, "output directory override");
        cmd->add_option("--seed", seed, "seed override")->each([this](const std::string&) {
            seed_set = true;
        });
        cmd->add_option("--dt", dt, "fixed step / hydro step override");
        cmd->add_option("--t-end", t_end, "horizon override");
        cmd->add_option("--rtol", rtol, "adaptive relative tolerance override");
        cmd->add_option("--atol", atol, "adaptive absolute tolerance override");
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-flock alignment dynamics laboratory"};
    app.require_subcommand(1);
    app.fallthrough(); // allow global flags after the subcommand
    int threads = default_workers();
    app.add_option("--threads", threads, "worker count for sweeps");

    std::string scenario_arg, run_dir;
    std::vector<std::string> params;
    Overrides ov;

    auto* run = app.add_subcommand("run", "run a scenario (preset name or config file)");
    run->add_option("scenario", scenario_arg)->required();
    ov.attach(run);

    auto* validate = app.add_subcommand("validate", "validate a scenario and print violations");
    validate->add_option("scenario", scenario_arg)->required();

    auto* presets = app.add_subcommand("presets", "list shipped presets");

    auto* report = app.add_subcommand("report", "re-derive diagnostics from a stored run");
    report->add_option("run_dir", run_dir)->required();

    auto* sweep = app.add_subcommand("sweep", "run a parameter sweep");
    sweep->add_option("scenario", scenario_arg)->required();
    sweep->add_option("--param", params, "key=v1,v2,... (repeatable, cartesian)")->required();
    ov.attach(sweep);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            auto s = resolve(scenario_arg);
            ov.apply(s);
            const auto outcome = mflock::run_scenario(s);
            if (!outcome.error.empty())
                std::cerr << "run failed: " << outcome.error << "\n";
            std::cout << "manifest: " << outcome.manifest_path << "\n";
            return outcome.exit_status;
        }
        if (*validate) {
            mflock::Scenario s;
            try {
                s = resolve(scenario_arg);
            } catch (const std::invalid_argument& e) {
                std::cout << e.what() << "\n";
                return 2;
            }
            const auto issues = mflock::validate_scenario(s);
            if (issues.empty()) {
                std::cout << "ok: " << s.name << "\n";
                return 0;
            }
            for (const auto& i : issues) std::cout << i << "\n";
            return 2;
        }
        if (*presets) {
            for (const auto& s : mflock::preset_library())
                std::cout << s.name << "  (" << s.kind << ", t_end=" << s.integrator.t_end
                          << ")\n";
            return 0;
        }
        if (*report) return mflock::report_run(run_dir);
        if (*sweep) {
            auto s = resolve(scenario_arg);
            ov.apply(s);
            const int failures = mflock::sweep_scenario(s, params, threads);
            if (failures > 0) std::cerr << failures << " sweep runs failed\n";
            return failures == 0 ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
