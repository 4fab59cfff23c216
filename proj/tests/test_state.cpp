#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "multiflock/state.hpp"

using namespace mflock;

namespace {

MultiFlockState random_state(std::uint64_t seed, int dim, std::vector<int> sizes,
                             bool unit_mass = false) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> upos(-5.0, 5.0), uvel(-2.0, 2.0), um(0.1, 3.0);
    MultiFlockState s;
    s.dim = dim;
    for (int n : sizes) {
        std::vector<std::vector<double>> xs, vs;
        std::vector<double> ms;
        for (int i = 0; i < n; ++i) {
            std::vector<double> x(dim), v(dim);
            for (int k = 0; k < dim; ++k) {
                x[k] = upos(gen);
                v[k] = uvel(gen);
            }
            xs.push_back(x);
            vs.push_back(v);
            ms.push_back(unit_mass ? 1.0 / n : um(gen));
        }
        s.flocks.push_back(Flock::make(dim, xs, vs, ms, KernelSpec::cucker_smale_kernel(1.0, 1.0)));
    }
    return s;
}

} // namespace

TEST_CASE("macro observables: symmetry and weighted means") {
    // One flock, two unit-mass agents at +-e1 with velocities +-e2.
    MultiFlockState s;
    s.dim = 2;
    s.flocks.push_back(Flock::make(2, {{1.0, 0.0}, {-1.0, 0.0}}, {{0.0, 1.0}, {0.0, -1.0}},
                                   {1.0, 1.0}, KernelSpec::constant_kernel(1.0)));
    auto m = macro_observables(s);
    CHECK(m.flock_mass[0] == 2.0);
    CHECK(m.Xc(0, 0) == 0.0);
    CHECK(m.Xc(0, 1) == 0.0);
    CHECK(m.Vc(0, 0) == 0.0);
    CHECK(m.Vc(0, 1) == 0.0);

    // Two single-agent flocks with masses 1 and 3: V = (0.25, 0).
    MultiFlockState s2;
    s2.dim = 2;
    s2.flocks.push_back(Flock::make(2, {{0.0, 0.0}}, {{1.0, 0.0}}, {1.0},
                                    KernelSpec::constant_kernel(1.0)));
    s2.flocks.push_back(Flock::make(2, {{3.0, 0.0}}, {{0.0, 0.0}}, {3.0},
                                    KernelSpec::constant_kernel(1.0)));
    auto m2 = macro_observables(s2);
    CHECK(m2.total_mass == 4.0);
    CHECK(m2.momentum_avg[0] == doctest::Approx(0.25));
    CHECK(m2.momentum_avg[1] == 0.0);

    // Masses (1,2) at positions (0,3) on a line: X = 2.
    MultiFlockState s3;
    s3.dim = 1;
    s3.flocks.push_back(
        Flock::make(1, {{0.0}, {3.0}}, {{0.0}, {0.0}}, {1.0, 2.0}, KernelSpec::constant_kernel(1.0)));
    CHECK(macro_observables(s3).Xc(0, 0) == doctest::Approx(2.0));
}

TEST_CASE("macro observables: mass-scaling invariance property") {
    auto s = random_state(11u, 3, {5, 9});
    auto m0 = macro_observables(s);
    const double c = 3.7;
    for (auto& f : s.flocks)
        for (auto& mi : f.mass) mi *= c;
    auto m1 = macro_observables(s);
    for (int a = 0; a < 2; ++a) {
        CHECK(m1.flock_mass[a] == doctest::Approx(c * m0.flock_mass[a]).epsilon(1e-13));
        for (int k = 0; k < 3; ++k) {
            CHECK(m1.Xc(a, k) == doctest::Approx(m0.Xc(a, k)).epsilon(1e-12));
            CHECK(m1.Vc(a, k) == doctest::Approx(m0.Vc(a, k)).epsilon(1e-12));
        }
    }
    CHECK(m1.total_mass == doctest::Approx(c * m0.total_mass).epsilon(1e-13));
    for (int k = 0; k < 3; ++k)
        CHECK(m1.momentum_avg[k] == doctest::Approx(m0.momentum_avg[k]).epsilon(1e-12));
}

TEST_CASE("shifted frame: zero means and reconstruction") {
    // Single-agent flock shifts to exactly zero.
    MultiFlockState s1;
    s1.dim = 2;
    s1.flocks.push_back(Flock::make(2, {{4.0, -1.0}}, {{2.0, 0.5}}, {2.0},
                                    KernelSpec::constant_kernel(1.0)));
    auto sh1 = to_shifted_frame(s1);
    CHECK(sh1.flocks[0].y_at(0, 0) == 0.0);
    CHECK(sh1.flocks[0].w_at(0, 1) == 0.0);

    // Two unit-mass agents with v = (1,0), (3,0): w = (-1,0), (1,0).
    MultiFlockState s2;
    s2.dim = 2;
    s2.flocks.push_back(Flock::make(2, {{0.0, 0.0}, {1.0, 0.0}}, {{1.0, 0.0}, {3.0, 0.0}},
                                    {1.0, 1.0}, KernelSpec::constant_kernel(1.0)));
    auto sh2 = to_shifted_frame(s2);
    CHECK(sh2.flocks[0].w_at(0, 0) == doctest::Approx(-1.0));
    CHECK(sh2.flocks[0].w_at(1, 0) == doctest::Approx(1.0));

    // Masses (1,3), 1D velocities 0 and 4: V = 3, w = (-3, 1).
    MultiFlockState s3;
    s3.dim = 1;
    s3.flocks.push_back(
        Flock::make(1, {{0.0}, {1.0}}, {{0.0}, {4.0}}, {1.0, 3.0}, KernelSpec::constant_kernel(1.0)));
    auto sh3 = to_shifted_frame(s3);
    CHECK(sh3.flocks[0].w_at(0, 0) == doctest::Approx(-3.0));
    CHECK(sh3.flocks[0].w_at(1, 0) == doctest::Approx(1.0));

    // Property: mass-weighted means of (y, w) vanish; adding back (X, V)
    // reconstructs the state.
    auto s = random_state(5u, 3, {7, 12, 3});
    auto macro = macro_observables(s);
    auto sh = to_shifted_frame(s, macro);
    for (int a = 0; a < s.flock_count(); ++a) {
        const auto& f = s.flocks[a];
        const auto& sf = sh.flocks[a];
        for (int k = 0; k < s.dim; ++k) {
            double my = 0.0, mw = 0.0, scale = 0.0;
            for (int i = 0; i < f.n; ++i) {
                my += f.mass[i] * sf.y_at(i, k);
                mw += f.mass[i] * sf.w_at(i, k);
                scale += f.mass[i] * (std::abs(f.x(i, k)) + std::abs(f.v(i, k)));
            }
            CHECK(std::abs(my) <= 1e-12 * std::max(1.0, scale));
            CHECK(std::abs(mw) <= 1e-12 * std::max(1.0, scale));
            for (int i = 0; i < f.n; ++i) {
                const double xr = sf.y_at(i, k) + macro.Xc(a, k);
                const double vr = sf.w_at(i, k) + macro.Vc(a, k);
                CHECK(xr == doctest::Approx(f.x(i, k)).epsilon(1e-13));
                CHECK(vr == doctest::Approx(f.v(i, k)).epsilon(1e-13));
            }
        }
    }
}

TEST_CASE("validate: reports violations by flock, agent and invariant") {
    auto good = random_state(3u, 2, {4});
    CHECK(validate(good).empty());

    auto bad_mass = good;
    bad_mass.flocks[0].mass[2] = 0.0;
    auto v1 = validate(bad_mass);
    REQUIRE(v1.size() == 1);
    CHECK(v1[0].invariant == "positivity");
    CHECK(v1[0].flock == 0);
    CHECK(v1[0].agent == 2);

    auto bad_card = good;
    bad_card.flocks[0].vel.pop_back();
    auto v2 = validate(bad_card);
    REQUIRE(v2.size() >= 1);
    CHECK(v2[0].invariant == "cardinality");
}

TEST_CASE("snapshot CSV round trip") {
    auto s = random_state(17u, 2, {3, 5});
    std::ostringstream os;
    write_snapshot_csv(os, s);
    const std::string first = os.str();
    CHECK(first.rfind("flock_id,agent_id,mass,x0,x1,v0,v1\n", 0) == 0);

    std::istringstream is(first);
    auto r = read_snapshot_csv(is, s);
    std::ostringstream os2;
    write_snapshot_csv(os2, r);
    CHECK(os2.str() == first);
}
