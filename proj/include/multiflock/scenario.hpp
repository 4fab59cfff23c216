#pragma once

#include <map>
#include <string>

#include "multiflock/hydro1d.hpp"
#include "multiflock/upscale.hpp"

namespace mflock {

// ---------------------------------------------------------------------------
// Scenario configuration.
//
// Flat, human-editable `key = value` text format; `#` starts a comment.
// Dotted keys form the tree (flock.0.kernel.family = cucker_smale).
// Canonical serialization sorts keys and drops comments, so save(load(x))
// is byte-idempotent on its own output.
// ---------------------------------------------------------------------------

struct FlockConfig {
    int n = 1;
    std::string mass_law = "uniform_total_one"; // m_i = 1/N ("unit": m_i = 1)
    double total_mass = 1.0;                    // used by mass_law = "total"
    KernelSpec kernel;
    double lambda = 1.0;
    std::optional<PotentialSpec> potential;
    std::string sampler = "grid"; // grid | gaussian_blob | two_cluster | custom_table
    std::vector<double> center;
    std::vector<double> center_velocity;
    double pos_spread = 1.0;   // grid half-extent / gaussian std
    double vel_spread = 0.0;   // gaussian std of velocities
    double cluster_gap = 2.0;  // two_cluster: center separation along axis 0
    double cluster_speed = 1.0; // two_cluster: closing speed along axis 0
    std::string table_path;    // custom_table: snapshot CSV
};

struct HydroFlockConfig {
    int particles = 256;
    KernelSpec kernel;
    double lambda = 1.0;
    // rho0 = amplitude * (1 - s^2)^2 with s = (x - center)/halfwidth.
    double center = 0.0, halfwidth = 1.0, amplitude = 1.0;
    // u0 family: constant (a), linear (a + b*(x - center)),
    // sine (a * sin(b * (x - center))), e_constant (u0 built so e0 == a).
    std::string u0 = "constant";
    double u0_a = 0.0, u0_b = 1.0;
    int grid_points = 2001;
};

struct Scenario {
    std::string name = "scenario";
    std::string kind = "master"; // master | hydro
    int dimension = 1;
    Mode mode = Mode::alignment_only;
    double epsilon = 0.0;
    KernelSpec psi;
    bool allow_heterogeneous_attraction = false;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::vector<FlockConfig> flocks;
    std::vector<HydroFlockConfig> hydro_flocks;
    IntegratorSpec integrator;
    double hydro_dt = 1e-3;
    HydroCoupling hydro_coupling = HydroCoupling::original_frame;
    int samples = 101; // uniform over [0, t_end]
    std::vector<int> reduce; // flocks replaced by super-agents at t = 0
    // Mid-run reduction policy: every k samples, flocks reducible against
    // all others collapse to super-agents (0 disables; reduction only).
    int reduce_policy_every = 0;
    double reduce_policy_eta = 1.0;
    bool emit_trajectory = true;
    std::string out_dir = "out";
};

// Parse/serialize through the flat key map.
std::map<std::string, std::string> parse_config_text(const std::string& text);
Scenario scenario_from_map(const std::map<std::string, std::string>& kv);
std::map<std::string, std::string> scenario_to_map(const Scenario& s);
std::string save_scenario(const Scenario& s); // canonical text

// Throws std::runtime_error with the offending line for parse failures and
// std::invalid_argument listing `path: message` items for validation errors.
Scenario load_scenario(const std::string& path);
Scenario load_scenario_text(const std::string& text);

// Empty list when valid; entries are "config.path: message".
std::vector<std::string> validate_scenario(const Scenario& s);

// Builds the initial state from the samplers (master scenarios).
MultiFlockState build_initial_state(const Scenario& s);
std::vector<HydroFlock1D> build_hydro_flocks(const Scenario& s);
ModelParams model_params(const Scenario& s);

// Shipped presets covering the studied regimes.
std::vector<Scenario> preset_library();
Scenario find_preset(const std::string& name); // throws if unknown

struct RunOutcome {
    int exit_status = 0;
    std::string error;
    std::string manifest_path;
};

// Writes trajectory CSVs, diagnostics CSV and a manifest JSON under
// s.out_dir; solver failures are recorded in the manifest with nonzero
// exit status rather than thrown.
RunOutcome run_scenario(const Scenario& s);

// Re-derives diagnostics.csv from the stored trajectory of a previous run.
int report_run(const std::string& run_dir);

// Embarrassingly parallel sweep; each override list entry is "key=v1,v2,...".
// Returns the number of failed runs.
int sweep_scenario(const Scenario& base, const std::vector<std::string>& param_lists,
                   int workers);

} // namespace mflock
