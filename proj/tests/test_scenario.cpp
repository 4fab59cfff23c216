#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "multiflock/rng.hpp"
#include "multiflock/scenario.hpp"

using namespace mflock;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& tag) {
    const fs::path p = fs::temp_directory_path() / ("mflock_test_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

} // namespace

TEST_CASE("counter RNG is a pure function of (seed, stream, index)") {
    CHECK(rng::u01(1, 2, 3) == rng::u01(1, 2, 3));
    CHECK(rng::u01(1, 2, 3) != rng::u01(1, 2, 4));
    CHECK(rng::u01(1, 2, 3) != rng::u01(2, 2, 3));
    double mean = 0.0;
    for (int i = 0; i < 4000; ++i) {
        const double u = rng::u01(7, 0, i);
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        mean += u;
    }
    CHECK(std::abs(mean / 4000 - 0.5) < 0.02);
    double m2 = 0.0;
    for (int i = 0; i < 4000; ++i) m2 += rng::normal(7, 1, i) * rng::normal(7, 1, i);
    CHECK(std::abs(m2 / 4000 - 1.0) < 0.08);
}

TEST_CASE("preset library ships the studied regimes and all validate") {
    auto lib = preset_library();
    CHECK(lib.size() >= 9);
    for (const auto& s : lib) {
        INFO(s.name);
        CHECK(validate_scenario(s).empty());
    }
    auto two = find_preset("two_islands");
    REQUIRE(two.flocks.size() == 2);
    CHECK(two.flocks[0].n == 64);
    CHECK(two.flocks[1].n == 8);
    CHECK_THROWS_AS(find_preset("no_such_preset"), std::invalid_argument);
}

TEST_CASE("config validation reports paths into the config") {
    auto s = find_preset("fast_local");
    s.seed_set = false;
    auto issues = validate_scenario(s);
    REQUIRE(issues.size() == 1);
    CHECK(issues[0].find("seed") != std::string::npos);

    const char* bad_family = "name = t\nflocks = 1\nflock.0.n = 2\n"
                             "flock.0.kernel.family = frobnicate\nintegrator.t_end = 1\n";
    try {
        load_scenario_text(bad_family);
        FAIL("expected an exception");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("family") != std::string::npos);
    }

    CHECK_THROWS_AS(parse_config_text("not a key value line\n"), std::runtime_error);
}

TEST_CASE("canonical serialization round-trips byte-identically") {
    for (const auto& s : preset_library()) {
        const std::string once = save_scenario(s);
        const std::string twice = save_scenario(load_scenario_text(once));
        CHECK(once == twice);
    }
}

TEST_CASE("samplers are deterministic and honor the mass law") {
    auto s = find_preset("two_islands");
    auto st1 = build_initial_state(s);
    auto st2 = build_initial_state(s);
    CHECK(st1.flocks[0].pos == st2.flocks[0].pos);
    CHECK(st1.flocks[1].vel == st2.flocks[1].vel);
    for (double m : st1.flocks[0].mass) CHECK(m == doctest::Approx(1.0 / 64));
    CHECK(validate(st1).empty());

    // two_cluster puts half the agents on each side, closing head-on.
    auto sc = find_preset("singular_collision");
    auto st3 = build_initial_state(sc);
    const auto& f = st3.flocks[0];
    int left = 0;
    for (int i = 0; i < f.n; ++i)
        if (f.x(i, 0) < 0.0) ++left;
    CHECK(left == 8);
    CHECK(f.v(0, 0) == doctest::Approx(1.0));
    CHECK(f.v(f.n - 1, 0) == doctest::Approx(-1.0));
}

TEST_CASE("custom_table sampler loads agents from a snapshot CSV") {
    // Write a snapshot for a 2-flock state and source flock 1 from it.
    MultiFlockState donor;
    donor.dim = 2;
    donor.flocks.push_back(Flock::make(2, {{0.0, 0.0}}, {{0.1, 0.0}}, {1.0},
                                       KernelSpec::constant_kernel(1.0)));
    donor.flocks.push_back(Flock::make(2, {{5.0, 1.0}, {6.0, -1.0}}, {{0.3, 0.4}, {-0.3, 0.2}},
                                       {0.7, 1.3}, KernelSpec::constant_kernel(1.0)));
    const auto dir = fresh_dir("table");
    {
        std::ofstream os(dir / "agents.csv", std::ios::binary);
        write_snapshot_csv(os, donor);
    }
    Scenario s;
    s.kind = "master";
    s.dimension = 2;
    s.psi = KernelSpec::constant_kernel(1.0);
    FlockConfig f0;
    f0.n = 4;
    f0.kernel = KernelSpec::cucker_smale_kernel(1.0, 1.0);
    f0.sampler = "grid";
    f0.center = {0.0, 0.0};
    f0.center_velocity = {0.0, 0.0};
    FlockConfig f1;
    f1.kernel = KernelSpec::cucker_smale_kernel(1.0, 1.0);
    f1.sampler = "custom_table";
    f1.table_path = (dir / "agents.csv").string();
    f1.center = {0.0, 0.0};
    f1.center_velocity = {0.0, 0.0};
    s.flocks = {f0, f1};
    auto st = build_initial_state(s);
    REQUIRE(st.flocks[1].n == 2);
    CHECK(st.flocks[1].x(1, 0) == 6.0);
    CHECK(st.flocks[1].v(0, 1) == 0.4);
    CHECK(st.flocks[1].mass[1] == 1.3);
}

TEST_CASE("two_cluster sampler in 2D splits agents head-on along axis 0") {
    Scenario s;
    s.kind = "master";
    s.dimension = 2;
    s.psi = KernelSpec::constant_kernel(1.0);
    FlockConfig f;
    f.n = 10;
    f.kernel = KernelSpec::cucker_smale_kernel(1.0, 1.0);
    f.sampler = "two_cluster";
    f.center = {1.0, 2.0};
    f.center_velocity = {0.0, 0.5};
    f.pos_spread = 0.2;
    f.cluster_gap = 4.0;
    f.cluster_speed = 0.7;
    s.flocks = {f};
    auto st = build_initial_state(s);
    int left = 0, right = 0;
    for (int i = 0; i < st.flocks[0].n; ++i) {
        if (st.flocks[0].x(i, 0) < 1.0) {
            ++left;
            CHECK(st.flocks[0].v(i, 0) == doctest::Approx(0.7));
        } else {
            ++right;
            CHECK(st.flocks[0].v(i, 0) == doctest::Approx(-0.7));
        }
        CHECK(st.flocks[0].v(i, 1) == doctest::Approx(0.5));
    }
    CHECK(left == 5);
    CHECK(right == 5);
}

TEST_CASE("tabulated kernel round-trips through the config format") {
    Scenario s = find_preset("fast_local");
    s.flocks[0].kernel = KernelSpec::tabulated_kernel({{0.0, 2.0}, {1.0, 1.0}, {3.0, 0.25}}, 5.0);
    const std::string text = save_scenario(s);
    CHECK(text.find("knots") != std::string::npos);
    const Scenario r = load_scenario_text(text);
    REQUIRE(r.flocks[0].kernel.family == KernelFamily::tabulated);
    REQUIRE(r.flocks[0].kernel.table.size() == 3);
    CHECK(r.flocks[0].kernel.table[2].first == 3.0);
    CHECK(r.flocks[0].kernel.table[2].second == 0.25);
    REQUIRE(r.flocks[0].kernel.cutoff.has_value());
    CHECK(*r.flocks[0].kernel.cutoff == 5.0);
    CHECK(save_scenario(r) == text);
}

TEST_CASE("run_scenario writes trajectory, diagnostics and manifest deterministically") {
    auto s = find_preset("two_islands");
    s.integrator.t_end = 2.0;
    s.samples = 21;
    const auto dir1 = fresh_dir("det1");
    const auto dir2 = fresh_dir("det2");
    s.out_dir = dir1.string();
    REQUIRE(run_scenario(s).exit_status == 0);
    s.out_dir = dir2.string();
    REQUIRE(run_scenario(s).exit_status == 0);

    CHECK(slurp(dir1 / "diagnostics.csv") == slurp(dir2 / "diagnostics.csv"));
    for (int k = 0; k < 21; ++k) {
        char name[32];
        std::snprintf(name, sizeof name, "t_%05d.csv", k);
        CHECK(slurp(dir1 / "trajectory" / name) == slurp(dir2 / "trajectory" / name));
    }
    // Manifest records the run inputs.
    const std::string manifest = slurp(dir1 / "manifest.json");
    CHECK(manifest.find("\"seed\"") != std::string::npos);
    CHECK(manifest.find("momentum_drift_rel") != std::string::npos);
}

TEST_CASE("empty sample schedule produces a manifest only") {
    auto s = find_preset("fast_local");
    s.samples = 0;
    s.integrator.t_end = 0.5;
    const auto dir = fresh_dir("manifest_only");
    s.out_dir = dir.string();
    REQUIRE(run_scenario(s).exit_status == 0);
    CHECK(fs::exists(dir / "manifest.json"));
    CHECK_FALSE(fs::exists(dir / "trajectory"));
}

TEST_CASE("report re-derives byte-identical diagnostics from a stored run") {
    auto s = find_preset("two_islands");
    s.integrator.t_end = 1.0;
    s.samples = 11;
    const auto dir = fresh_dir("report");
    s.out_dir = dir.string();
    REQUIRE(run_scenario(s).exit_status == 0);
    const std::string original = slurp(dir / "diagnostics.csv");
    fs::remove(dir / "diagnostics.csv");
    REQUIRE(report_run(dir.string()) == 0);
    CHECK(slurp(dir / "diagnostics.csv") == original);
}

TEST_CASE("sweep fans out over the parameter grid") {
    auto s = find_preset("two_islands");
    s.integrator.t_end = 0.5;
    s.samples = 3;
    s.emit_trajectory = false;
    const auto dir = fresh_dir("sweep");
    s.out_dir = (dir / "base").string();
    const int failures = sweep_scenario(s, {"epsilon=0.01,0.05", "integrator.t_end=0.5,1"}, 2);
    CHECK(failures == 0);
    int found = 0;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_directory() && fs::exists(entry.path() / "manifest.json")) ++found;
    CHECK(found == 4);
}

TEST_CASE("mid-run reduction policy collapses flocks once they separate") {
    Scenario s;
    s.kind = "master";
    s.name = "policy";
    s.dimension = 1;
    s.seed = 5;
    s.seed_set = true;
    s.epsilon = 0.01;
    s.psi = KernelSpec::cucker_smale_kernel(1.0, 1.0);
    for (int a = 0; a < 2; ++a) {
        FlockConfig f;
        f.n = 6;
        f.kernel = KernelSpec::cucker_smale_kernel(1.0, 1.0);
        f.sampler = "gaussian_blob";
        f.center = {2.5 * a};
        f.center_velocity = {a == 0 ? -0.5 : 0.5}; // drifting apart
        f.pos_spread = 0.15;
        f.vel_spread = 0.02;
        s.flocks.push_back(std::move(f));
    }
    s.integrator.t_end = 10.0;
    s.samples = 41;
    s.reduce_policy_every = 4;
    s.reduce_policy_eta = 1.0;
    s.emit_trajectory = true;
    const auto dir = fresh_dir("policy");
    s.out_dir = dir.string();
    REQUIRE(run_scenario(s).exit_status == 0);
    const std::string manifest = slurp(dir / "manifest.json");
    CHECK(manifest.find("policy_reductions") != std::string::npos);
    // The final snapshot holds super-agents only.
    std::ifstream last(dir / "trajectory" / "t_00040.csv");
    REQUIRE(last);
    int rows = 0;
    std::string line;
    std::getline(last, line); // header
    while (std::getline(last, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 2);
}

TEST_CASE("hydro scenario runs end to end with a verdict in the manifest") {
    auto s = find_preset("hydro_global");
    s.integrator.t_end = 2.0;
    s.samples = 11;
    s.hydro_flocks[0].particles = 64;
    const auto dir = fresh_dir("hydro_run");
    s.out_dir = dir.string();
    REQUIRE(run_scenario(s).exit_status == 0);
    const std::string manifest = slurp(dir / "manifest.json");
    CHECK(manifest.find("global_guaranteed") != std::string::npos);
    CHECK(fs::exists(dir / "hydro" / "t_00000.csv"));

    // report re-derives the hydro diagnostics byte-identically.
    const std::string original = slurp(dir / "diagnostics.csv");
    fs::remove(dir / "diagnostics.csv");
    REQUIRE(report_run(dir.string()) == 0);
    CHECK(slurp(dir / "diagnostics.csv") == original);
}
