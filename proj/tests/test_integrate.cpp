#include <doctest.h>

#include <cmath>

#include "builders.hpp"
#include "multiflock/integrate.hpp"

using namespace mflock;

namespace {

ModelParams plain_params(double eps = 0.0, KernelSpec psi = KernelSpec::constant_kernel(1.0)) {
    ModelParams p;
    p.epsilon = eps;
    p.psi = psi;
    return p;
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = a + (b - a) * i / (n - 1);
    return out;
}

double max_abs_vel_diff(const MultiFlockState& x, const MultiFlockState& y) {
    double m = 0.0;
    for (int a = 0; a < x.flock_count(); ++a)
        for (std::size_t i = 0; i < x.flocks[a].vel.size(); ++i)
            m = std::max(m, std::abs(x.flocks[a].vel[i] - y.flocks[a].vel[i]));
    return m;
}

} // namespace

TEST_CASE("two-agent constant-kernel flock matches the closed form") {
    // v_diff' = -lambda (m1 + m2) v_diff, so dv(t) = dv0 exp(-t) here.
    auto s0 = builders::two_agent_line(0.5, 0.5, -1.0, 1.0);
    IntegratorSpec ispec;
    ispec.t_end = 5.0;
    auto res = integrate(s0, plain_params(), ispec, linspace(0.0, 5.0, 51));
    REQUIRE(res.samples.size() == 51);
    for (const auto& st : res.samples) {
        const double dv = st.flocks[0].v(1, 0) - st.flocks[0].v(0, 0);
        const double expect = 2.0 * std::exp(-st.time);
        CHECK(std::abs(dv - expect) <= 1e-6 * std::max(1.0, std::abs(expect)));
    }
    const auto& last = res.samples.back();
    CHECK(last.flocks[0].v(1, 0) - last.flocks[0].v(0, 0) ==
          doctest::Approx(2.0 * std::exp(-5.0)).epsilon(1e-6));
    // Spot value at t = 1.
    const auto& s1 = res.samples[10];
    CHECK(s1.flocks[0].v(1, 0) - s1.flocks[0].v(0, 0) == doctest::Approx(0.7357589).epsilon(1e-6));
}

TEST_CASE("super-agent two-flock closed form") {
    MultiFlockState s0;
    s0.dim = 1;
    s0.flocks.push_back(Flock::make(1, {{0.0}}, {{0.0}}, {1.0}, KernelSpec::constant_kernel(1.0)));
    s0.flocks.push_back(Flock::make(1, {{3.0}}, {{2.0}}, {1.0}, KernelSpec::constant_kernel(1.0)));
    IntegratorSpec ispec;
    ispec.t_end = 3.0;
    auto res = integrate(s0, plain_params(1.0), ispec, linspace(0.0, 3.0, 31));
    for (const auto& st : res.samples) {
        const double dV = st.flocks[1].v(0, 0) - st.flocks[0].v(0, 0);
        CHECK(std::abs(dV - 2.0 * std::exp(-2.0 * st.time)) <= 1e-6);
    }
}

TEST_CASE("aligned flock translates uniformly to round-off") {
    auto s0 = builders::random_state(55u, 2, {6}, KernelSpec::cucker_smale_kernel(1.0, 1.0));
    for (int i = 0; i < 6; ++i) {
        s0.flocks[0].v(i, 0) = 1.5;
        s0.flocks[0].v(i, 1) = -0.5;
    }
    IntegratorSpec ispec;
    ispec.t_end = 4.0;
    auto res = integrate(s0, plain_params(), ispec, {4.0});
    const auto& st = res.samples[0];
    for (int i = 0; i < 6; ++i) {
        CHECK(st.flocks[0].x(i, 0) ==
              doctest::Approx(s0.flocks[0].x(i, 0) + 4.0 * 1.5).epsilon(1e-13));
        CHECK(st.flocks[0].v(i, 1) == doctest::Approx(-0.5).epsilon(1e-14));
    }
}

TEST_CASE("zero-velocity state keeps positions constant") {
    auto s0 = builders::random_state(66u, 3, {4, 3}, KernelSpec::cucker_smale_kernel(1.0, 0.5));
    for (auto& f : s0.flocks)
        for (auto& v : f.vel) v = 0.0;
    auto traj = reference_integrate(s0, plain_params(0.5), 0.01, 2.0, {2.0});
    for (int a = 0; a < s0.flock_count(); ++a)
        for (std::size_t i = 0; i < s0.flocks[a].pos.size(); ++i)
            CHECK(traj[0].flocks[a].pos[i] == s0.flocks[a].pos[i]);
}

TEST_CASE("reference integrator has order 4 (Richardson factor in [12, 20])") {
    auto s0 = builders::two_agent_line(0.5, 0.5, -1.0, 1.0);
    auto params = plain_params();
    auto end_err = [&](double dt) {
        auto traj = reference_integrate(s0, params, dt, 1.0, {1.0});
        const double dv = traj[0].flocks[0].v(1, 0) - traj[0].flocks[0].v(0, 0);
        return std::abs(dv - 2.0 * std::exp(-1.0));
    };
    const double e1 = end_err(0.05);
    const double e2 = end_err(0.025);
    CHECK(e1 / e2 >= 12.0);
    CHECK(e1 / e2 <= 20.0);
}

TEST_CASE("reference oracle agrees with the adaptive run on a smooth 3-flock scenario") {
    auto s0 = builders::random_state(12u, 2, {5, 4, 3}, KernelSpec::cucker_smale_kernel(1.0, 1.0),
                                     false, 1.0, 2.0, 1.0);
    auto params = plain_params(0.2, KernelSpec::cucker_smale_kernel(1.0, 0.5));
    IntegratorSpec ispec;
    ispec.t_end = 5.0;
    auto res = integrate(s0, params, ispec, {5.0});
    const double dt_ref = res.stats.min_accepted_step / 8.0;
    auto ref = reference_integrate(s0, params, dt_ref, 5.0, {5.0});
    CHECK(max_abs_vel_diff(res.samples[0], ref[0]) <= 1e-7);
}

TEST_CASE("adaptive and fixed-step runs agree to 10*rtol") {
    auto s0 = builders::random_state(23u, 2, {6, 3}, KernelSpec::cucker_smale_kernel(1.0, 1.0),
                                     false, 1.0, 2.0, 1.0);
    auto params = plain_params(0.1, KernelSpec::cucker_smale_kernel(1.0, 1.0));
    IntegratorSpec adapt;
    adapt.t_end = 4.0;
    adapt.rtol = 1e-8;
    adapt.atol = 1e-10;
    IntegratorSpec fixed;
    fixed.method = Method::rk4_fixed;
    fixed.dt = 1e-3;
    fixed.t_end = 4.0;
    auto ra = integrate(s0, params, adapt, {4.0});
    auto rf = integrate(s0, params, fixed, {4.0});
    CHECK(max_abs_vel_diff(ra.samples[0], rf.samples[0]) <= 10.0 * adapt.rtol);
}

TEST_CASE("momentum drift stays below 1e-9 relative") {
    auto s0 = builders::random_state(31u, 2, {8, 6}, KernelSpec::cucker_smale_kernel(1.5, 0.7));
    auto params = plain_params(0.3, KernelSpec::cucker_smale_kernel(1.0, 1.0));
    IntegratorSpec ispec;
    ispec.t_end = 10.0;
    auto res = integrate(s0, params, ispec, linspace(0.0, 10.0, 11));
    const auto m0 = macro_observables(res.samples.front());
    double v0 = 0.0;
    for (double c : m0.momentum_avg) v0 += c * c;
    v0 = std::sqrt(v0);
    for (const auto& st : res.samples) {
        const auto m = macro_observables(st);
        double drift = 0.0;
        for (int k = 0; k < st.dim; ++k) {
            const double dk = m.momentum_avg[k] - m0.momentum_avg[k];
            drift += dk * dk;
        }
        CHECK(std::sqrt(drift) <= 1e-9 * (1.0 + v0));
    }
}

TEST_CASE("running velocity max is non-increasing along alignment trajectories") {
    auto s0 = builders::random_state(41u, 2, {7, 5}, KernelSpec::cucker_smale_kernel(1.0, 1.0));
    auto params = plain_params(0.2, KernelSpec::cucker_smale_kernel(1.0, 0.5));
    IntegratorSpec ispec;
    ispec.t_end = 8.0;
    auto res = integrate(s0, params, ispec, linspace(0.0, 8.0, 81));
    for (int k = 0; k < 2; ++k) {
        double prev_max = 1e300;
        for (const auto& st : res.samples) {
            double vmax = -1e300;
            for (const auto& f : st.flocks)
                for (int i = 0; i < f.n; ++i) vmax = std::max(vmax, f.v(i, k));
            // cushion: a few local-error units per sample interval
            CHECK(vmax <= prev_max + 10.0 * (ispec.atol + ispec.rtol * std::abs(prev_max)));
            prev_max = std::min(prev_max, vmax);
        }
    }
}

TEST_CASE("min_pair_distance exact scans") {
    MultiFlockState s;
    s.dim = 1;
    s.flocks.push_back(Flock::make(1, {{0.0}, {1.0}, {3.0}}, {{0.0}, {0.0}, {0.0}},
                                   {1.0, 1.0, 1.0}, KernelSpec::constant_kernel(1.0)));
    s.flocks.push_back(Flock::make(1, {{9.0}}, {{0.0}}, {1.0}, KernelSpec::constant_kernel(1.0)));
    auto pm = min_pair_distance(s);
    CHECK(pm[0].dist == doctest::Approx(1.0));
    CHECK(pm[0].i == 0);
    CHECK(pm[0].j == 1);
    CHECK(std::isinf(pm[1].dist));

    MultiFlockState sq;
    sq.dim = 2;
    sq.flocks.push_back(Flock::make(2, {{0.0, 0.0}, {2.0, 0.0}, {0.0, 2.0}, {2.0, 2.0}},
                                    {{0, 0}, {0, 0}, {0, 0}, {0, 0}}, {1, 1, 1, 1},
                                    KernelSpec::constant_kernel(1.0)));
    CHECK(min_pair_distance(sq)[0].dist == doctest::Approx(2.0));
}

TEST_CASE("collision guard keeps singular head-on agents separated") {
    // 1D head-on pairs under phi = r^-1 (fat head): alignment wins before contact.
    MultiFlockState s0;
    s0.dim = 1;
    s0.flocks.push_back(Flock::make(
        1, {{-1.1}, {-1.0}, {1.0}, {1.1}}, {{1.0}, {1.0}, {-1.0}, {-1.0}},
        {0.25, 0.25, 0.25, 0.25}, KernelSpec::power_singular_kernel(1.0, 0.0)));
    IntegratorSpec ispec;
    ispec.t_end = 3.0;
    auto res = integrate(s0, plain_params(), ispec, linspace(0.0, 3.0, 31));
    double dmin = 1e300;
    for (const auto& st : res.samples) dmin = std::min(dmin, min_pair_distance(st)[0].dist);
    CHECK(dmin > 0.0);
    // Events are time ordered.
    for (std::size_t i = 1; i < res.log.events.size(); ++i)
        CHECK(res.log.events[i].time >= res.log.events[i - 1].time);
}

TEST_CASE("states beyond 1e12 raise a blow-up error with the last good time") {
    MultiFlockState s0;
    s0.dim = 1;
    s0.flocks.push_back(Flock::make(1, {{0.0}}, {{5e12}}, {1.0}, KernelSpec::constant_kernel(1.0)));
    IntegratorSpec ispec;
    ispec.t_end = 1.0;
    CHECK_THROWS_AS(integrate(s0, plain_params(), ispec, {1.0}), BlowupError);
}
