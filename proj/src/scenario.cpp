#include "multiflock/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

#include <json.hpp>

#include "multiflock/rng.hpp"

namespace mflock {

namespace rng {
double normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t pair_index) {
    const double u1 = u01(seed, stream, 2 * pair_index);
    const double u2 = u01(seed, stream, 2 * pair_index + 1);
    const double r = std::sqrt(-2.0 * std::log(1.0 - u1)); // 1-u1 in (0,1]
    return r * std::cos(2.0 * std::acos(-1.0) * u2);
}
} // namespace rng

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        throw std::invalid_argument(key + ": not a number: '" + v + "'");
    }
}

long to_long(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long x = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        throw std::invalid_argument(key + ": not an integer: '" + v + "'");
    }
}

std::vector<double> to_vector(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::istringstream ss(v);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(to_double(key, trim(cell)));
    return out;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class KV {
public:
    explicit KV(const std::map<std::string, std::string>& kv) : kv_(kv) {}

    bool has(const std::string& key) const { return kv_.count(key) > 0; }
    std::string str(const std::string& key, const std::string& dflt) const {
        auto it = kv_.find(key);
        return it == kv_.end() ? dflt : it->second;
    }
    std::string require(const std::string& key) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) throw std::invalid_argument(key + ": required key is missing");
        return it->second;
    }
    double num(const std::string& key, double dflt) const {
        auto it = kv_.find(key);
        return it == kv_.end() ? dflt : to_double(key, it->second);
    }
    long integer(const std::string& key, long dflt) const {
        auto it = kv_.find(key);
        return it == kv_.end() ? dflt : to_long(key, it->second);
    }

private:
    const std::map<std::string, std::string>& kv_;
};

KernelSpec kernel_from_map(const KV& kv, const std::string& prefix) {
    const std::string family = kv.str(prefix + "family", "constant");
    const double c0 = kv.num(prefix + "c0", 1.0);
    try {
        if (family == "constant") return KernelSpec::constant_kernel(c0);
        if (family == "cucker_smale")
            return KernelSpec::cucker_smale_kernel(c0, kv.num(prefix + "exponent", 0.0));
        if (family == "power_singular")
            return KernelSpec::power_singular_kernel(c0, kv.num(prefix + "s", 0.0));
        if (family == "tabulated") {
            std::vector<std::pair<double, double>> knots;
            std::istringstream ss(kv.require(prefix + "knots"));
            std::string cell;
            while (std::getline(ss, cell, ';')) {
                const auto colon = cell.find(':');
                if (colon == std::string::npos)
                    throw std::invalid_argument("knots must be r:phi;r:phi;...");
                knots.emplace_back(to_double(prefix + "knots", trim(cell.substr(0, colon))),
                                   to_double(prefix + "knots", trim(cell.substr(colon + 1))));
            }
            std::optional<double> cutoff;
            if (kv.has(prefix + "cutoff")) cutoff = kv.num(prefix + "cutoff", 0.0);
            return KernelSpec::tabulated_kernel(std::move(knots), cutoff);
        }
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(prefix + "family: " + e.what());
    }
    throw std::invalid_argument(prefix + "family: unknown kernel family '" + family + "'");
}

void kernel_to_map(const KernelSpec& k, const std::string& prefix,
                   std::map<std::string, std::string>& kv) {
    switch (k.family) {
    case KernelFamily::constant:
        kv[prefix + "family"] = "constant";
        break;
    case KernelFamily::cucker_smale:
        kv[prefix + "family"] = "cucker_smale";
        kv[prefix + "exponent"] = fmt(k.exponent);
        break;
    case KernelFamily::power_singular:
        kv[prefix + "family"] = "power_singular";
        kv[prefix + "s"] = fmt(k.s);
        break;
    case KernelFamily::tabulated: {
        kv[prefix + "family"] = "tabulated";
        std::string knots;
        for (const auto& [r, p] : k.table) {
            if (!knots.empty()) knots += ';';
            knots += fmt(r) + ":" + fmt(p);
        }
        kv[prefix + "knots"] = knots;
        if (k.cutoff) kv[prefix + "cutoff"] = fmt(*k.cutoff);
        break;
    }
    }
    kv[prefix + "c0"] = fmt(k.c0);
}

std::optional<PotentialSpec> potential_from_map(const KV& kv, const std::string& prefix) {
    if (!kv.has(prefix + "family")) return std::nullopt;
    const std::string family = kv.str(prefix + "family", "");
    if (family != "shifted_power")
        throw std::invalid_argument(prefix + "family: unknown potential family '" + family + "'");
    try {
        return PotentialSpec::shifted_power(kv.num(prefix + "L", 0.0),
                                            kv.num(prefix + "Lprime", 1.0),
                                            kv.num(prefix + "beta", 3.0),
                                            kv.num(prefix + "a0", 1.0));
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(prefix + "family: " + e.what());
    }
}

void potential_to_map(const PotentialSpec& p, const std::string& prefix,
                      std::map<std::string, std::string>& kv) {
    kv[prefix + "family"] = "shifted_power";
    kv[prefix + "L"] = fmt(p.inner_radius);
    kv[prefix + "Lprime"] = fmt(p.transition_radius);
    kv[prefix + "beta"] = fmt(p.beta);
    kv[prefix + "a0"] = fmt(p.a0);
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> out;
    if (n <= 0) return out;
    if (n == 1) return {b};
    out.resize(n);
    for (int i = 0; i < n; ++i) out[i] = a + (b - a) * i / (n - 1);
    return out;
}

const char* event_kind_name(EventKind k) {
    switch (k) {
    case EventKind::collision_near_miss: return "collision_near_miss";
    case EventKind::step_rejected: return "step_rejected";
    case EventKind::blowup_suspected: return "blowup_suspected";
    }
    return "unknown";
}

const char* hydro_class_name(HydroClass c) {
    switch (c) {
    case HydroClass::global_guaranteed: return "global_guaranteed";
    case HydroClass::indeterminate_band: return "indeterminate_band";
    case HydroClass::blowup_guaranteed: return "blowup_guaranteed";
    }
    return "unknown";
}

} // namespace

std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(lineno) +
                                     ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw std::runtime_error("config line " + std::to_string(lineno) + ": empty key");
        kv[key] = value;
    }
    return kv;
}

Scenario scenario_from_map(const std::map<std::string, std::string>& raw) {
    const KV kv(raw);
    Scenario s;
    s.name = kv.str("name", "scenario");
    s.kind = kv.str("kind", "master");
    s.dimension = static_cast<int>(kv.integer("dimension", 1));
    const std::string mode = kv.str("mode", "alignment_only");
    if (mode == "alignment_only")
        s.mode = Mode::alignment_only;
    else if (mode == "alignment_attraction")
        s.mode = Mode::alignment_attraction;
    else if (mode == "superagent_only")
        s.mode = Mode::superagent_only;
    else
        throw std::invalid_argument("mode: unknown mode '" + mode + "'");
    s.epsilon = kv.num("epsilon", 0.0);
    s.psi = kernel_from_map(kv, "psi.");
    s.allow_heterogeneous_attraction = kv.integer("allow_heterogeneous_attraction", 0) != 0;
    if (kv.has("seed")) {
        s.seed = static_cast<std::uint64_t>(kv.integer("seed", 0));
        s.seed_set = true;
    }

    const int A = static_cast<int>(kv.integer("flocks", 0));
    for (int a = 0; a < A; ++a) {
        const std::string p = "flock." + std::to_string(a) + ".";
        FlockConfig f;
        f.n = static_cast<int>(kv.integer(p + "n", 1));
        f.mass_law = kv.str(p + "mass_law", "uniform_total_one");
        f.total_mass = kv.num(p + "mass", 1.0);
        f.kernel = kernel_from_map(kv, p + "kernel.");
        f.lambda = kv.num(p + "lambda", 1.0);
        f.potential = potential_from_map(kv, p + "potential.");
        f.sampler = kv.str(p + "sampler", "grid");
        f.center = kv.has(p + "center") ? to_vector(p + "center", kv.require(p + "center"))
                                        : std::vector<double>(s.dimension, 0.0);
        f.center_velocity = kv.has(p + "center_velocity")
                                ? to_vector(p + "center_velocity", kv.require(p + "center_velocity"))
                                : std::vector<double>(s.dimension, 0.0);
        f.pos_spread = kv.num(p + "pos_spread", 1.0);
        f.vel_spread = kv.num(p + "vel_spread", 0.0);
        f.cluster_gap = kv.num(p + "cluster_gap", 2.0);
        f.cluster_speed = kv.num(p + "cluster_speed", 1.0);
        f.table_path = kv.str(p + "table", "");
        s.flocks.push_back(std::move(f));
    }

    const int H = static_cast<int>(kv.integer("hflocks", 0));
    for (int a = 0; a < H; ++a) {
        const std::string p = "hflock." + std::to_string(a) + ".";
        HydroFlockConfig h;
        h.particles = static_cast<int>(kv.integer(p + "particles", 256));
        h.kernel = kernel_from_map(kv, p + "kernel.");
        h.lambda = kv.num(p + "lambda", 1.0);
        h.center = kv.num(p + "center", 0.0);
        h.halfwidth = kv.num(p + "halfwidth", 1.0);
        h.amplitude = kv.num(p + "amplitude", 1.0);
        h.u0 = kv.str(p + "u0", "constant");
        h.u0_a = kv.num(p + "u0_a", 0.0);
        h.u0_b = kv.num(p + "u0_b", 1.0);
        h.grid_points = static_cast<int>(kv.integer(p + "grid_points", 2001));
        s.hydro_flocks.push_back(std::move(h));
    }

    const std::string method = kv.str("integrator.method", "rk45_adaptive");
    if (method == "rk45_adaptive")
        s.integrator.method = Method::rk45_adaptive;
    else if (method == "rk4_fixed")
        s.integrator.method = Method::rk4_fixed;
    else
        throw std::invalid_argument("integrator.method: unknown method '" + method + "'");
    s.integrator.dt = kv.num("integrator.dt", 1e-2);
    s.integrator.rtol = kv.num("integrator.rtol", 1e-8);
    s.integrator.atol = kv.num("integrator.atol", 1e-10);
    s.integrator.t_end = kv.num("integrator.t_end", 1.0);
    s.integrator.collision_guard = kv.integer("integrator.collision_guard", 0) != 0;
    s.integrator.min_pair_fraction = kv.num("integrator.min_pair_fraction", 0.5);
    s.hydro_dt = kv.num("hydro.dt", 1e-3);
    const std::string coupling = kv.str("hydro.coupling", "original");
    if (coupling == "original")
        s.hydro_coupling = HydroCoupling::original_frame;
    else if (coupling == "shifted")
        s.hydro_coupling = HydroCoupling::shifted_frame;
    else
        throw std::invalid_argument("hydro.coupling: unknown coupling '" + coupling + "'");
    s.samples = static_cast<int>(kv.integer("samples", 101));
    if (kv.has("reduce"))
        for (double v : to_vector("reduce", kv.require("reduce")))
            s.reduce.push_back(static_cast<int>(v));
    s.reduce_policy_every = static_cast<int>(kv.integer("reduce_policy.every", 0));
    s.reduce_policy_eta = kv.num("reduce_policy.eta", 1.0);
    s.emit_trajectory = kv.integer("emit_trajectory", 1) != 0;
    s.out_dir = kv.str("out", "out/" + s.name);
    return s;
}

std::map<std::string, std::string> scenario_to_map(const Scenario& s) {
    std::map<std::string, std::string> kv;
    kv["name"] = s.name;
    kv["kind"] = s.kind;
    kv["dimension"] = std::to_string(s.dimension);
    kv["mode"] = s.mode == Mode::alignment_only ? "alignment_only"
                 : s.mode == Mode::alignment_attraction ? "alignment_attraction"
                                                        : "superagent_only";
    kv["epsilon"] = fmt(s.epsilon);
    kernel_to_map(s.psi, "psi.", kv);
    if (s.allow_heterogeneous_attraction) kv["allow_heterogeneous_attraction"] = "1";
    if (s.seed_set) kv["seed"] = std::to_string(s.seed);
    kv["flocks"] = std::to_string(s.flocks.size());
    for (std::size_t a = 0; a < s.flocks.size(); ++a) {
        const auto& f = s.flocks[a];
        const std::string p = "flock." + std::to_string(a) + ".";
        kv[p + "n"] = std::to_string(f.n);
        kv[p + "mass_law"] = f.mass_law;
        if (f.mass_law == "total") kv[p + "mass"] = fmt(f.total_mass);
        kernel_to_map(f.kernel, p + "kernel.", kv);
        kv[p + "lambda"] = fmt(f.lambda);
        if (f.potential) potential_to_map(*f.potential, p + "potential.", kv);
        kv[p + "sampler"] = f.sampler;
        std::string c, cv;
        for (std::size_t k = 0; k < f.center.size(); ++k)
            c += (k ? "," : "") + fmt(f.center[k]);
        for (std::size_t k = 0; k < f.center_velocity.size(); ++k)
            cv += (k ? "," : "") + fmt(f.center_velocity[k]);
        kv[p + "center"] = c;
        kv[p + "center_velocity"] = cv;
        kv[p + "pos_spread"] = fmt(f.pos_spread);
        kv[p + "vel_spread"] = fmt(f.vel_spread);
        if (f.sampler == "two_cluster") {
            kv[p + "cluster_gap"] = fmt(f.cluster_gap);
            kv[p + "cluster_speed"] = fmt(f.cluster_speed);
        }
        if (!f.table_path.empty()) kv[p + "table"] = f.table_path;
    }
    if (!s.hydro_flocks.empty()) kv["hflocks"] = std::to_string(s.hydro_flocks.size());
    for (std::size_t a = 0; a < s.hydro_flocks.size(); ++a) {
        const auto& h = s.hydro_flocks[a];
        const std::string p = "hflock." + std::to_string(a) + ".";
        kv[p + "particles"] = std::to_string(h.particles);
        kernel_to_map(h.kernel, p + "kernel.", kv);
        kv[p + "lambda"] = fmt(h.lambda);
        kv[p + "center"] = fmt(h.center);
        kv[p + "halfwidth"] = fmt(h.halfwidth);
        kv[p + "amplitude"] = fmt(h.amplitude);
        kv[p + "u0"] = h.u0;
        kv[p + "u0_a"] = fmt(h.u0_a);
        kv[p + "u0_b"] = fmt(h.u0_b);
        kv[p + "grid_points"] = std::to_string(h.grid_points);
    }
    kv["integrator.method"] =
        s.integrator.method == Method::rk45_adaptive ? "rk45_adaptive" : "rk4_fixed";
    if (s.integrator.method == Method::rk4_fixed) kv["integrator.dt"] = fmt(s.integrator.dt);
    kv["integrator.rtol"] = fmt(s.integrator.rtol);
    kv["integrator.atol"] = fmt(s.integrator.atol);
    kv["integrator.t_end"] = fmt(s.integrator.t_end);
    if (s.integrator.collision_guard) kv["integrator.collision_guard"] = "1";
    kv["integrator.min_pair_fraction"] = fmt(s.integrator.min_pair_fraction);
    if (s.kind == "hydro") {
        kv["hydro.dt"] = fmt(s.hydro_dt);
        kv["hydro.coupling"] =
            s.hydro_coupling == HydroCoupling::original_frame ? "original" : "shifted";
    }
    kv["samples"] = std::to_string(s.samples);
    if (!s.reduce.empty()) {
        std::string r;
        for (std::size_t k = 0; k < s.reduce.size(); ++k)
            r += (k ? "," : "") + std::to_string(s.reduce[k]);
        kv["reduce"] = r;
    }
    if (s.reduce_policy_every > 0) {
        kv["reduce_policy.every"] = std::to_string(s.reduce_policy_every);
        kv["reduce_policy.eta"] = fmt(s.reduce_policy_eta);
    }
    kv["emit_trajectory"] = s.emit_trajectory ? "1" : "0";
    kv["out"] = s.out_dir;
    return kv;
}

std::string save_scenario(const Scenario& s) {
    std::string out;
    for (const auto& [k, v] : scenario_to_map(s)) out += k + " = " + v + "\n";
    return out;
}

Scenario load_scenario_text(const std::string& text) {
    Scenario s = scenario_from_map(parse_config_text(text));
    auto issues = validate_scenario(s);
    if (!issues.empty()) {
        std::string msg = "invalid scenario:";
        for (const auto& i : issues) msg += "\n  " + i;
        throw std::invalid_argument(msg);
    }
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open scenario file: " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return load_scenario_text(ss.str());
}

std::vector<std::string> validate_scenario(const Scenario& s) {
    std::vector<std::string> out;
    if (s.kind != "master" && s.kind != "hydro") out.push_back("kind: must be master or hydro");
    if (s.dimension < 1) out.push_back("dimension: must be >= 1");
    if (s.kind == "hydro" && s.dimension != 1) out.push_back("dimension: hydro scenarios are 1D");
    if (!(s.epsilon >= 0.0)) out.push_back("epsilon: must be >= 0");
    try {
        s.psi.validate();
        if (!s.psi.is_bounded()) out.push_back("psi.family: inter-flock kernel must be bounded");
    } catch (const std::exception& e) {
        out.push_back(std::string("psi.family: ") + e.what());
    }
    if (s.kind == "master" && s.flocks.empty()) out.push_back("flocks: at least one flock");
    if (s.kind == "hydro" && s.hydro_flocks.empty())
        out.push_back("hflocks: at least one hydro flock");
    for (std::size_t a = 0; a < s.flocks.size(); ++a) {
        const auto& f = s.flocks[a];
        const std::string p = "flock." + std::to_string(a) + ".";
        if (f.n < 1) out.push_back(p + "n: must be >= 1");
        try {
            f.kernel.validate();
        } catch (const std::exception& e) {
            out.push_back(p + "kernel.family: " + e.what());
        }
        if (f.potential) {
            try {
                f.potential->validate();
            } catch (const std::exception& e) {
                out.push_back(p + "potential.family: " + e.what());
            }
        }
        if (f.sampler != "grid" && f.sampler != "gaussian_blob" && f.sampler != "two_cluster" &&
            f.sampler != "custom_table")
            out.push_back(p + "sampler: unknown sampler '" + f.sampler + "'");
        if (f.sampler == "gaussian_blob" && !s.seed_set)
            out.push_back("seed: required for randomized sampler gaussian_blob");
        if (f.sampler == "custom_table" && f.table_path.empty())
            out.push_back(p + "table: required for sampler custom_table");
        if (static_cast<int>(f.center.size()) != s.dimension)
            out.push_back(p + "center: needs " + std::to_string(s.dimension) + " components");
        if (static_cast<int>(f.center_velocity.size()) != s.dimension)
            out.push_back(p + "center_velocity: needs " + std::to_string(s.dimension) +
                          " components");
        if (f.mass_law != "uniform_total_one" && f.mass_law != "unit" && f.mass_law != "total")
            out.push_back(p + "mass_law: unknown mass law '" + f.mass_law + "'");
        if (s.mode == Mode::alignment_attraction && !f.potential)
            out.push_back(p + "potential.family: attraction mode needs a potential");
        if (s.mode == Mode::alignment_attraction && f.mass_law != "uniform_total_one" &&
            !s.allow_heterogeneous_attraction)
            out.push_back(p + "mass_law: attraction requires the unit-mass convention "
                              "(or allow_heterogeneous_attraction)");
    }
    for (std::size_t a = 0; a < s.hydro_flocks.size(); ++a) {
        const auto& h = s.hydro_flocks[a];
        const std::string p = "hflock." + std::to_string(a) + ".";
        if (h.particles < 2) out.push_back(p + "particles: must be >= 2");
        try {
            h.kernel.validate();
            if (!h.kernel.is_w2inf())
                out.push_back(p + "kernel.family: hydro kernels must be W^{2,inf} "
                                  "(constant or cucker_smale)");
        } catch (const std::exception& e) {
            out.push_back(p + "kernel.family: " + e.what());
        }
        if (!(h.halfwidth > 0.0)) out.push_back(p + "halfwidth: must be > 0");
        if (!(h.amplitude > 0.0)) out.push_back(p + "amplitude: must be > 0");
        if (h.u0 != "constant" && h.u0 != "linear" && h.u0 != "sine" && h.u0 != "e_constant")
            out.push_back(p + "u0: unknown velocity profile '" + h.u0 + "'");
        if (h.grid_points < 3) out.push_back(p + "grid_points: must be >= 3");
    }
    try {
        s.integrator.validate();
    } catch (const std::exception& e) {
        out.push_back(std::string("integrator.method: ") + e.what());
    }
    if (s.kind == "hydro" && !(s.hydro_dt > 0.0)) out.push_back("hydro.dt: must be > 0");
    if (s.samples < 0) out.push_back("samples: must be >= 0");
    for (int r : s.reduce)
        if (r < 0 || r >= static_cast<int>(s.flocks.size()))
            out.push_back("reduce: flock id " + std::to_string(r) + " out of range");
    if (s.reduce_policy_every < 0) out.push_back("reduce_policy.every: must be >= 0");
    if (s.reduce_policy_every > 0 && s.samples < 2)
        out.push_back("reduce_policy.every: needs a sample grid (samples >= 2)");
    return out;
}

namespace {

// Smallest lattice covering n points in d dimensions, centered on `center`.
std::vector<std::vector<double>> lattice_positions(int n, int d, const std::vector<double>& center,
                                                   double half_extent) {
    int side = 1;
    while (std::pow(side, d) < n) ++side;
    std::vector<std::vector<double>> out;
    out.reserve(n);
    for (int idx = 0; idx < n; ++idx) {
        std::vector<double> x(d);
        int rem = idx;
        for (int k = 0; k < d; ++k) {
            const int q = rem % side;
            rem /= side;
            x[k] = center[k] + (side == 1 ? 0.0
                                          : half_extent * (2.0 * q / (side - 1) - 1.0));
        }
        out.push_back(std::move(x));
    }
    return out;
}

std::vector<double> masses_of(const FlockConfig& f) {
    double mi = 1.0 / f.n;
    if (f.mass_law == "unit") mi = 1.0;
    if (f.mass_law == "total") mi = f.total_mass / f.n;
    return std::vector<double>(f.n, mi);
}

Flock sample_flock(const Scenario& s, int flock_id) {
    const FlockConfig& f = s.flocks[flock_id];
    const int d = s.dimension;
    std::vector<std::vector<double>> xs, vs;
    if (f.sampler == "grid") {
        xs = lattice_positions(f.n, d, f.center, f.pos_spread);
        vs.assign(f.n, f.center_velocity);
    } else if (f.sampler == "gaussian_blob") {
        // Streams 2*flock (positions) and 2*flock+1 (velocities); one normal
        // draw per coordinate, counters laid out agent-major.
        for (int i = 0; i < f.n; ++i) {
            std::vector<double> x(d), v(d);
            for (int k = 0; k < d; ++k) {
                const std::uint64_t c = static_cast<std::uint64_t>(i) * d + k;
                x[k] = f.center[k] + f.pos_spread * rng::normal(s.seed, 2 * flock_id, c);
                v[k] = f.center_velocity[k] + f.vel_spread * rng::normal(s.seed, 2 * flock_id + 1, c);
            }
            xs.push_back(std::move(x));
            vs.push_back(std::move(v));
        }
    } else if (f.sampler == "two_cluster") {
        const int n1 = f.n / 2, n2 = f.n - n1;
        auto c1 = f.center, c2 = f.center;
        c1[0] -= 0.5 * f.cluster_gap;
        c2[0] += 0.5 * f.cluster_gap;
        auto xs1 = lattice_positions(n1, d, c1, f.pos_spread);
        auto xs2 = lattice_positions(n2, d, c2, f.pos_spread);
        xs.insert(xs.end(), xs1.begin(), xs1.end());
        xs.insert(xs.end(), xs2.begin(), xs2.end());
        auto v1 = f.center_velocity, v2 = f.center_velocity;
        v1[0] += f.cluster_speed; // head-on closing
        v2[0] -= f.cluster_speed;
        vs.assign(n1, v1);
        vs.insert(vs.end(), n2, v2);
    } else if (f.sampler == "custom_table") {
        std::ifstream is(f.table_path);
        if (!is) throw std::runtime_error("cannot open agent table: " + f.table_path);
        std::string line;
        if (!std::getline(is, line) || line.rfind("flock_id,agent_id,mass", 0) != 0)
            throw std::runtime_error("agent table header mismatch: " + f.table_path);
        std::vector<double> ms;
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            std::istringstream ss(line);
            std::string cell;
            std::vector<double> row;
            while (std::getline(ss, cell, ',')) row.push_back(to_double("table", trim(cell)));
            if (static_cast<int>(row.size()) != 3 + 2 * d)
                throw std::runtime_error("agent table row width mismatch");
            if (static_cast<int>(row[0]) != flock_id) continue;
            std::vector<double> x(row.begin() + 3, row.begin() + 3 + d);
            std::vector<double> v(row.begin() + 3 + d, row.begin() + 3 + 2 * d);
            xs.push_back(std::move(x));
            vs.push_back(std::move(v));
            ms.push_back(row[2]);
        }
        if (xs.empty()) throw std::runtime_error("agent table has no rows for this flock");
        return Flock::make(d, xs, vs, ms, f.kernel, f.lambda, f.potential);
    }
    return Flock::make(d, xs, vs, masses_of(f), f.kernel, f.lambda, f.potential);
}

} // namespace

MultiFlockState build_initial_state(const Scenario& s) {
    MultiFlockState state;
    state.dim = s.dimension;
    for (int a = 0; a < static_cast<int>(s.flocks.size()); ++a)
        state.flocks.push_back(sample_flock(s, a));
    if (!s.reduce.empty()) return reduce_to_superagents(state, s.reduce);
    return state;
}

std::vector<HydroFlock1D> build_hydro_flocks(const Scenario& s) {
    std::vector<HydroFlock1D> flocks;
    for (const auto& h : s.hydro_flocks) {
        auto rho0 = [h](double x) {
            const double q = (x - h.center) / h.halfwidth;
            if (std::abs(q) >= 1.0) return 0.0;
            const double b = 1.0 - q * q;
            return h.amplitude * b * b;
        };
        const double lo = h.center - 1.2 * h.halfwidth, hi = h.center + 1.2 * h.halfwidth;
        std::function<double(double)> u0;
        if (h.u0 == "constant") {
            u0 = [h](double) { return h.u0_a; };
        } else if (h.u0 == "linear") {
            u0 = [h](double x) { return h.u0_a + h.u0_b * (x - h.center); };
        } else if (h.u0 == "sine") {
            u0 = [h](double x) { return h.u0_a * std::sin(h.u0_b * (x - h.center)); };
        } else if (h.u0 == "e_constant") {
            // Build u0 with u0' = a - lambda (phi*rho0), so e0 == a up to
            // discretization: integrate the sampled slope on the grid.
            const int G = h.grid_points;
            const double step = (hi - lo) / (G - 1);
            auto table = std::make_shared<std::vector<double>>(G, 0.0);
            std::vector<double> slope(G);
            for (int k = 0; k < G; ++k) {
                const double x = lo + k * step;
                double conv = 0.0;
                for (int q = 0; q < G; ++q) {
                    const double y = lo + q * step;
                    const double w = (q == 0 || q == G - 1) ? 0.5 : 1.0;
                    conv += w * evaluate_kernel(h.kernel, std::abs(x - y)) * rho0(y) * step;
                }
                slope[k] = h.u0_a - h.lambda * conv;
            }
            for (int k = 1; k < G; ++k)
                (*table)[k] = (*table)[k - 1] + 0.5 * (slope[k - 1] + slope[k]) * step;
            u0 = [table, lo, step, G](double x) {
                if (x <= lo) return table->front();
                const int k = std::min(G - 2, static_cast<int>((x - lo) / step));
                const double s01 = (x - (lo + k * step)) / step;
                return (*table)[k] + s01 * ((*table)[k + 1] - (*table)[k]);
            };
        } else {
            throw std::invalid_argument("unknown hydro u0 profile: " + h.u0);
        }
        flocks.push_back(init_from_profiles(rho0, u0, lo, hi, h.grid_points, h.particles,
                                            h.kernel, h.lambda));
    }
    return flocks;
}

ModelParams model_params(const Scenario& s) {
    ModelParams p;
    p.epsilon = s.epsilon;
    p.psi = s.psi;
    p.mode = s.mode;
    p.allow_heterogeneous_attraction = s.allow_heterogeneous_attraction;
    return p;
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

namespace {

Scenario base_master(const std::string& name, int dim) {
    Scenario s;
    s.name = name;
    s.kind = "master";
    s.dimension = dim;
    s.psi = KernelSpec::constant_kernel(1.0);
    s.out_dir = "out/" + name;
    return s;
}

FlockConfig blob(int n, std::vector<double> center, std::vector<double> vel, double pos_std,
                 double vel_std, KernelSpec kernel, double lambda = 1.0) {
    FlockConfig f;
    f.n = n;
    f.kernel = std::move(kernel);
    f.lambda = lambda;
    f.sampler = "gaussian_blob";
    f.center = std::move(center);
    f.center_velocity = std::move(vel);
    f.pos_spread = pos_std;
    f.vel_spread = vel_std;
    return f;
}

} // namespace

std::vector<Scenario> preset_library() {
    std::vector<Scenario> lib;

    { // Two-scale island pair: a large and a small crowd, weak coupling.
        Scenario s = base_master("two_islands", 2);
        s.epsilon = 0.05;
        s.psi = KernelSpec::cucker_smale_kernel(1.0, 1.0);
        s.seed = 7;
        s.seed_set = true;
        s.flocks.push_back(blob(64, {0.0, 0.0}, {0.3, 0.0}, 0.5, 0.3,
                                KernelSpec::cucker_smale_kernel(1.0, 0.5)));
        s.flocks.push_back(blob(8, {15.0, 0.0}, {-0.3, 0.1}, 0.3, 0.2,
                                KernelSpec::cucker_smale_kernel(1.0, 0.5)));
        s.integrator.t_end = 20.0;
        s.samples = 201;
        lib.push_back(std::move(s));
    }
    { // Fast local alignment of a single fat-tailed flock (eps = 0).
        Scenario s = base_master("fast_local", 2);
        s.seed = 11;
        s.seed_set = true;
        s.flocks.push_back(blob(64, {0.0, 0.0}, {0.0, 0.0}, 0.4, 0.25,
                                KernelSpec::cucker_smale_kernel(1.0, 0.5)));
        s.integrator.t_end = 25.0;
        s.samples = 251;
        lib.push_back(std::move(s));
    }
    { // Slow global alignment with silent internal kernels.
        Scenario s = base_master("slow_global", 2);
        s.epsilon = 0.05;
        s.psi = KernelSpec::cucker_smale_kernel(1.0, 1.0);
        s.seed = 13;
        s.seed_set = true;
        const KernelSpec silent = KernelSpec::constant_kernel(0.0);
        s.flocks.push_back(blob(8, {0.0, 0.0}, {0.15, 0.0}, 0.2, 0.05, silent));
        s.flocks.push_back(blob(8, {2.5, 0.0}, {-0.1, 0.1}, 0.2, 0.05, silent));
        s.flocks.push_back(blob(8, {1.2, 2.0}, {0.0, -0.12}, 0.2, 0.05, silent));
        s.integrator.t_end = 100.0;
        s.samples = 401;
        lib.push_back(std::move(s));
    }
    { // 2-zone attraction: aggregation to diameter <= L with algebraic decay.
        Scenario s = base_master("attraction_2zone", 2);
        s.mode = Mode::alignment_attraction;
        s.seed = 17;
        s.seed_set = true;
        auto f = blob(64, {0.0, 0.0}, {0.0, 0.0}, 0.8, 0.3,
                      KernelSpec::cucker_smale_kernel(1.0, 0.5));
        f.potential = PotentialSpec::shifted_power(1.0, 1.5, 3.0, 1.0);
        s.flocks.push_back(std::move(f));
        s.integrator.t_end = 100.0;
        s.integrator.rtol = 1e-6;
        s.integrator.atol = 1e-9;
        s.samples = 501;
        lib.push_back(std::move(s));
    }
    { // Globally supported quadratic-touch potential: exponential aggregation.
        Scenario s = base_master("aggregation_quadratic", 2);
        s.mode = Mode::alignment_attraction;
        s.seed = 19;
        s.seed_set = true;
        auto f = blob(64, {0.0, 0.0}, {0.0, 0.0}, 0.6, 0.25,
                      KernelSpec::cucker_smale_kernel(2.0, 0.5));
        f.potential = PotentialSpec::quadratic(0.25);
        s.flocks.push_back(std::move(f));
        s.integrator.t_end = 30.0;
        s.integrator.rtol = 1e-8;
        s.samples = 301;
        lib.push_back(std::move(s));
    }
    { // Singular fat-head kernel, head-on clusters: no internal collisions.
        Scenario s = base_master("singular_collision", 1);
        s.seed = 23;
        s.seed_set = true;
        FlockConfig f;
        f.n = 16;
        f.kernel = KernelSpec::power_singular_kernel(1.0, 0.5);
        f.sampler = "two_cluster";
        f.center = {0.0};
        f.center_velocity = {0.0};
        f.pos_spread = 0.35;
        f.cluster_gap = 2.0;
        f.cluster_speed = 1.0;
        s.flocks.push_back(std::move(f));
        s.integrator.t_end = 20.0;
        s.integrator.collision_guard = true;
        s.samples = 201;
        lib.push_back(std::move(s));
    }
    { // Global hydro run: positive e everywhere, strong flocking.
        Scenario s = base_master("hydro_global", 1);
        s.kind = "hydro";
        s.seed = 27;
        s.seed_set = true;
        HydroFlockConfig h;
        h.particles = 256;
        h.kernel = KernelSpec::cucker_smale_kernel(1.0, 1.0);
        h.amplitude = 15.0 / 16.0; // unit mass
        // Nontrivial slopes, still above the threshold: min e0 ~ 0.45.
        h.u0 = "sine";
        h.u0_a = 0.3;
        h.u0_b = 1.0;
        s.hydro_flocks.push_back(std::move(h));
        s.hydro_dt = 5e-3;
        s.integrator.t_end = 50.0;
        s.samples = 201;
        lib.push_back(std::move(s));
    }
    { // Guaranteed hydro blowup: e0 below -eps M psi(0).
        Scenario s = base_master("hydro_blowup", 1);
        s.kind = "hydro";
        s.epsilon = 0.1;
        s.psi = KernelSpec::cucker_smale_kernel(1.0, 1.0);
        s.seed = 31;
        s.seed_set = true;
        HydroFlockConfig h0;
        h0.particles = 256;
        h0.kernel = KernelSpec::cucker_smale_kernel(1.0, 1.0);
        h0.amplitude = 15.0 / 16.0;
        h0.u0 = "e_constant";
        // e0 = -(1+delta) eps M psi(0) with delta = 0.5, M = 2, psi(0) = 1.
        h0.u0_a = -0.3;
        HydroFlockConfig h1 = h0;
        h1.center = 6.0;
        h1.u0 = "constant";
        h1.u0_a = 0.0;
        s.hydro_flocks.push_back(std::move(h0));
        s.hydro_flocks.push_back(std::move(h1));
        s.hydro_dt = 2e-3;
        s.integrator.t_end = 30.0;
        s.samples = 121;
        lib.push_back(std::move(s));
    }
    { // Mixed description: the far small flock is carried as a super-agent.
        Scenario s = base_master("hybrid_upscale", 2);
        s.epsilon = 0.05;
        s.psi = KernelSpec::cucker_smale_kernel(1.0, 1.0);
        s.seed = 29;
        s.seed_set = true;
        s.flocks.push_back(blob(48, {0.0, 0.0}, {0.2, 0.0}, 0.4, 0.2,
                                KernelSpec::cucker_smale_kernel(1.0, 0.5)));
        s.flocks.push_back(blob(32, {25.0, 0.0}, {-0.2, 0.05}, 0.4, 0.2,
                                KernelSpec::cucker_smale_kernel(1.0, 0.5)));
        s.reduce = {1};
        s.integrator.t_end = 10.0;
        s.samples = 101;
        lib.push_back(std::move(s));
    }
    return lib;
}

Scenario find_preset(const std::string& name) {
    for (auto& s : preset_library())
        if (s.name == name) return s;
    throw std::invalid_argument("unknown preset: " + name);
}

// ---------------------------------------------------------------------------
// Run / report / sweep
// ---------------------------------------------------------------------------

namespace {

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << content;
}

nlohmann::json events_json(const EventLog& log) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : log.events) {
        nlohmann::json j;
        j["time"] = e.time;
        j["kind"] = event_kind_name(e.kind);
        j["payload"] = e.payload;
        arr.push_back(j);
    }
    return arr;
}

int run_master(const Scenario& s, nlohmann::json& manifest, const fs::path& out) {
    const MultiFlockState state0 = build_initial_state(s);
    const ModelParams params = model_params(s);
    const std::vector<double> ts = linspace(0.0, s.integrator.t_end, s.samples);
    manifest["sample_times"] = ts;

    IntegrationResult res;
    nlohmann::json policy_log = nlohmann::json::array();
    try {
        if (s.reduce_policy_every > 0 && static_cast<int>(ts.size()) >= 2) {
            // Integrate in chunks; between chunks the reduction policy may
            // collapse well-separated flocks to super-agents.
            MultiFlockState cur = state0;
            double t0 = 0.0;
            std::size_t k0 = 0;
            while (k0 + 1 < ts.size()) {
                const std::size_t k1 =
                    std::min(ts.size() - 1,
                             k0 + static_cast<std::size_t>(s.reduce_policy_every));
                IntegratorSpec chunk = s.integrator;
                chunk.t_end = ts[k1] - t0;
                std::vector<double> local(ts.begin() + k0, ts.begin() + k1 + 1);
                for (double& v : local) v -= t0;
                auto part = integrate(cur, params, chunk, local);
                for (std::size_t q = (k0 == 0 ? 0 : 1); q < part.samples.size(); ++q) {
                    part.samples[q].time += t0;
                    res.samples.push_back(part.samples[q]);
                }
                for (auto& ev : part.log.events) {
                    ev.time += t0;
                    res.log.events.push_back(ev);
                }
                res.stats.steps += part.stats.steps;
                res.stats.rejected += part.stats.rejected;
                res.stats.rhs_evals += part.stats.rhs_evals;
                res.stats.min_accepted_step =
                    std::min(res.stats.min_accepted_step, part.stats.min_accepted_step);
                res.stats.max_accepted_step =
                    std::max(res.stats.max_accepted_step, part.stats.max_accepted_step);
                cur = res.samples.back();
                cur.time = 0.0;
                t0 = ts[k1];
                k0 = k1;
                if (k0 + 1 < ts.size()) {
                    const auto reduced =
                        reduction_policy_step(cur, s.reduce_policy_eta);
                    if (!reduced.empty())
                        policy_log.push_back({{"time", t0}, {"reduced", reduced}});
                }
            }
        } else {
            res = integrate(state0, params, s.integrator, ts);
        }
    } catch (const CollisionError& e) {
        manifest["error"] = std::string("collision: ") + e.what();
        manifest["error_time"] = e.time;
        return 1;
    } catch (const BlowupError& e) {
        manifest["error"] = std::string("blowup: ") + e.what();
        manifest["error_time"] = e.last_good_time;
        return 1;
    } catch (const std::exception& e) {
        manifest["error"] = e.what();
        return 1;
    }

    if (s.emit_trajectory && !res.samples.empty()) {
        fs::create_directories(out / "trajectory");
        for (std::size_t k = 0; k < res.samples.size(); ++k) {
            char name[32];
            std::snprintf(name, sizeof name, "t_%05zu.csv", k);
            std::ostringstream os;
            write_snapshot_csv(os, res.samples[k]);
            write_file(out / "trajectory" / name, os.str());
        }
    }

    std::vector<DiagnosticsRecord> records;
    records.reserve(res.samples.size());
    for (const auto& st : res.samples) records.push_back(compute_record(st, params));
    {
        std::ostringstream os;
        write_diagnostics_csv(os, records);
        write_file(out / "diagnostics.csv", os.str());
    }

    // Momentum drift over the run, relative as in the integrate contract.
    double drift = 0.0, v0 = 0.0;
    if (!res.samples.empty()) {
        const auto m0 = macro_observables(res.samples.front());
        for (double c : m0.momentum_avg) v0 += c * c;
        v0 = std::sqrt(v0);
        for (const auto& st : res.samples) {
            const auto m = macro_observables(st);
            double d2 = 0.0;
            for (int k = 0; k < st.dim; ++k) {
                const double dk = m.momentum_avg[k] - m0.momentum_avg[k];
                d2 += dk * dk;
            }
            drift = std::max(drift, std::sqrt(d2));
        }
    }
    manifest["momentum_drift_rel"] = drift / (1.0 + v0);
    manifest["unit_mass_convention"] = records.empty() ? true : records.front().unit_mass;
    manifest["events"] = events_json(res.log);
    if (!policy_log.empty()) manifest["policy_reductions"] = policy_log;
    manifest["stats"] = {{"steps", res.stats.steps},
                         {"rejected", res.stats.rejected},
                         {"min_accepted_step", res.stats.min_accepted_step},
                         {"max_accepted_step", res.stats.max_accepted_step},
                         {"rhs_evals", res.stats.rhs_evals}};
    return 0;
}

int run_hydro_scenario(const Scenario& s, nlohmann::json& manifest, const fs::path& out) {
    std::vector<HydroFlock1D> flocks;
    try {
        flocks = build_hydro_flocks(s);
    } catch (const std::exception& e) {
        manifest["error"] = e.what();
        return 1;
    }
    const ModelParams params = model_params(s);
    const auto verdict = threshold_verdict(flocks, params);
    nlohmann::json vj;
    vj["classification"] = hydro_class_name(verdict.classification);
    vj["min_e"] = verdict.min_e;
    vj["band_floor"] = verdict.band_floor;
    if (verdict.improved_floor) {
        vj["improved_floor"] = *verdict.improved_floor;
        vj["improved_classification"] = hydro_class_name(*verdict.improved_classification);
    }
    manifest["threshold_verdict"] = vj;

    HydroRunResult run;
    try {
        run = run_hydro(flocks, params, s.hydro_dt, s.integrator.t_end, std::max(2, s.samples),
                        s.hydro_coupling);
    } catch (const std::exception& e) {
        manifest["error"] = e.what();
        return 1;
    }
    manifest["sample_times"] = run.t;
    manifest["events"] = events_json(run.log);
    manifest["blew_up"] = run.blew_up;
    manifest["crossed"] = run.crossed;
    manifest["stop_time"] = run.stop_time;
    if (auto rep = detect_blowup(run)) {
        manifest["blowup_report"] = {{"first_crossing_time", rep->first_crossing_time},
                                     {"estimated_blowup_time", rep->estimated_blowup_time}};
    }

    if (s.emit_trajectory && !run.samples.empty()) {
        fs::create_directories(out / "hydro");
        for (std::size_t k = 0; k < run.samples.size(); ++k) {
            char name[32];
            std::snprintf(name, sizeof name, "t_%05zu.csv", k);
            std::ostringstream os;
            write_hydro_snapshot_csv(os, run.samples[k]);
            write_file(out / "hydro" / name, os.str());
        }
    }

    // Wide hydro diagnostics: threshold quantity, slopes and macro state.
    {
        std::ostringstream os;
        const int A = static_cast<int>(flocks.size());
        os << "t";
        for (int a = 0; a < A; ++a)
            os << ",min_e_" << a << ",sup_up_" << a << ",mass_" << a << ",X_" << a << ",V_" << a;
        os << "\n";
        for (std::size_t k = 0; k < run.samples.size(); ++k) {
            os << fmt(run.t[k]);
            const auto macro = hydro_macro(run.samples[k]);
            for (int a = 0; a < A; ++a) {
                const auto& f = run.samples[k][a];
                const auto conv = convolution_at_particles(f);
                double mine = std::numeric_limits<double>::infinity(), supup = 0.0;
                for (int i = 0; i < f.n(); ++i) {
                    mine = std::min(mine, f.e[i]);
                    supup = std::max(supup, std::abs(f.e[i] - conv[i]));
                }
                os << ',' << fmt(mine) << ',' << fmt(supup) << ',' << fmt(macro.flock_mass[a])
                   << ',' << fmt(macro.X[a]) << ',' << fmt(macro.V[a]);
            }
            os << "\n";
        }
        write_file(out / "diagnostics.csv", os.str());
    }

    if (!run.blew_up && !run.crossed && run.samples.size() >= 12) {
        fs::create_directories(out / "grid");
        for (std::size_t a = 0; a < flocks.size(); ++a) {
            const auto prof = profile_convergence(run, static_cast<int>(a));
            std::ostringstream os;
            write_hydro_grid_csv(os, prof);
            write_file(out / "grid" / ("flock" + std::to_string(a) + ".csv"), os.str());
        }
    }
    return 0;
}

} // namespace

RunOutcome run_scenario(const Scenario& s) {
    RunOutcome outcome;
    const auto issues = validate_scenario(s);
    const fs::path out(s.out_dir);
    fs::create_directories(out);

    nlohmann::json manifest;
    manifest["name"] = s.name;
    manifest["kind"] = s.kind;
    manifest["version"] = "0.1.0";
    manifest["config"] = save_scenario(s);
    manifest["workers"] = 1;
    if (s.seed_set) manifest["seed"] = s.seed;

    int status = 0;
    if (!issues.empty()) {
        manifest["error"] = "validation failed";
        manifest["validation"] = issues;
        status = 2;
    } else if (s.kind == "hydro") {
        status = run_hydro_scenario(s, manifest, out);
    } else {
        status = run_master(s, manifest, out);
    }
    manifest["exit_status"] = status;
    const fs::path mpath = out / "manifest.json";
    write_file(mpath, manifest.dump(2) + "\n");
    outcome.exit_status = status;
    outcome.manifest_path = mpath.string();
    if (manifest.contains("error")) outcome.error = manifest["error"].get<std::string>();
    return outcome;
}

int report_run(const std::string& run_dir) {
    const fs::path dir(run_dir);
    std::ifstream mis(dir / "manifest.json");
    if (!mis) throw std::runtime_error("no manifest.json under " + run_dir);
    nlohmann::json manifest;
    mis >> manifest;
    const Scenario s = load_scenario_text(manifest["config"].get<std::string>());
    const std::vector<double> ts = manifest["sample_times"].get<std::vector<double>>();

    const ModelParams params = model_params(s);
    if (s.kind == "hydro") {
        // Rebuild particle flocks from the stored snapshots; kernels and
        // amplitudes come from the config echo.
        std::ostringstream os;
        const int A = static_cast<int>(s.hydro_flocks.size());
        os << "t";
        for (int a = 0; a < A; ++a)
            os << ",min_e_" << a << ",sup_up_" << a << ",mass_" << a << ",X_" << a << ",V_"
               << a;
        os << "\n";
        for (std::size_t k = 0; k < ts.size(); ++k) {
            char name[32];
            std::snprintf(name, sizeof name, "t_%05zu.csv", k);
            std::ifstream is(dir / "hydro" / name);
            if (!is) break; // blowup runs stop early
            std::string line;
            std::getline(is, line);
            std::vector<HydroFlock1D> flocks(A);
            for (int a = 0; a < A; ++a) {
                flocks[a].phi = s.hydro_flocks[a].kernel;
                flocks[a].lambda = s.hydro_flocks[a].lambda;
            }
            while (std::getline(is, line)) {
                if (line.empty()) continue;
                std::istringstream ss(line);
                std::string cell;
                std::vector<double> row;
                while (std::getline(ss, cell, ',')) row.push_back(to_double("hydro", cell));
                auto& f = flocks[static_cast<int>(row[0])];
                f.m.push_back(row[2]);
                f.x.push_back(row[3]);
                f.v.push_back(row[4]);
                f.e.push_back(row[5]);
                f.rho.push_back(row[6]);
            }
            os << fmt(ts[k]);
            const auto macro = hydro_macro(flocks);
            for (int a = 0; a < A; ++a) {
                const auto conv = convolution_at_particles(flocks[a]);
                double mine = std::numeric_limits<double>::infinity(), supup = 0.0;
                for (int i = 0; i < flocks[a].n(); ++i) {
                    mine = std::min(mine, flocks[a].e[i]);
                    supup = std::max(supup, std::abs(flocks[a].e[i] - conv[i]));
                }
                os << ',' << fmt(mine) << ',' << fmt(supup) << ',' << fmt(macro.flock_mass[a])
                   << ',' << fmt(macro.X[a]) << ',' << fmt(macro.V[a]);
            }
            os << "\n";
        }
        write_file(dir / "diagnostics.csv", os.str());
        return 0;
    }

    MultiFlockState proto = build_initial_state(s);
    std::vector<DiagnosticsRecord> records;
    for (std::size_t k = 0; k < ts.size(); ++k) {
        char name[32];
        std::snprintf(name, sizeof name, "t_%05zu.csv", k);
        std::ifstream is(dir / "trajectory" / name);
        if (!is) throw std::runtime_error("missing trajectory sample " + std::string(name));
        MultiFlockState st = read_snapshot_csv(is, proto);
        st.time = ts[k];
        records.push_back(compute_record(st, params));
    }
    std::ostringstream os;
    write_diagnostics_csv(os, records);
    write_file(dir / "diagnostics.csv", os.str());
    return 0;
}

int sweep_scenario(const Scenario& base, const std::vector<std::string>& param_lists,
                   int workers) {
    struct Axis {
        std::string key;
        std::vector<std::string> values;
    };
    std::vector<Axis> axes;
    for (const auto& spec : param_lists) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("--param expects key=v1,v2,...: " + spec);
        Axis ax;
        ax.key = trim(spec.substr(0, eq));
        std::istringstream ss(spec.substr(eq + 1));
        std::string cell;
        while (std::getline(ss, cell, ',')) ax.values.push_back(trim(cell));
        if (ax.values.empty()) throw std::invalid_argument("--param has no values: " + spec);
        axes.push_back(std::move(ax));
    }

    std::vector<Scenario> runs;
    std::vector<std::size_t> idx(axes.size(), 0);
    const auto base_map = scenario_to_map(base);
    for (;;) {
        auto kvs = base_map;
        std::string suffix;
        for (std::size_t q = 0; q < axes.size(); ++q) {
            kvs[axes[q].key] = axes[q].values[idx[q]];
            suffix += "__" + axes[q].key + "=" + axes[q].values[idx[q]];
        }
        kvs["out"] = base.out_dir + suffix;
        runs.push_back(scenario_from_map(kvs));
        std::size_t q = 0;
        for (; q < axes.size(); ++q) {
            if (++idx[q] < axes[q].values.size()) break;
            idx[q] = 0;
        }
        if (q == axes.size()) break;
    }

    workers = std::max(1, workers);
    std::atomic<int> failures{0};
    std::atomic<std::size_t> next{0};
    std::vector<std::future<void>> pool;
    const int nworkers = std::min<std::size_t>(workers, runs.size());
    for (int w = 0; w < nworkers; ++w) {
        pool.push_back(std::async(std::launch::async, [&]() {
            for (;;) {
                const std::size_t k = next.fetch_add(1);
                if (k >= runs.size()) return;
                if (run_scenario(runs[k]).exit_status != 0) ++failures;
            }
        }));
    }
    for (auto& f : pool) f.get();
    return failures.load();
}

} // namespace mflock
