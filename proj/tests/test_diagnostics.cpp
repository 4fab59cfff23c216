#include <doctest.h>

#include <cmath>

#include "builders.hpp"
#include "multiflock/diagnostics.hpp"
#include "multiflock/integrate.hpp"
#include "oracles.hpp"

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

std::vector<double> times_of(const std::vector<MultiFlockState>& traj) {
    std::vector<double> t;
    for (const auto& s : traj) t.push_back(s.time);
    return t;
}

} // namespace

TEST_CASE("compute_record: aligned flock, kinetic value, 3-4-5 diameter") {
    auto s = builders::random_state(1u, 2, {5}, KernelSpec::cucker_smale_kernel(1.0, 1.0));
    for (int i = 0; i < 5; ++i) {
        s.flocks[0].v(i, 0) = 0.3;
        s.flocks[0].v(i, 1) = 0.3;
    }
    auto rec = compute_record(s, plain_params());
    CHECK(rec.flocks[0].alignment <= 1e-15);
    CHECK(rec.flocks[0].kinetic <= 1e-30);
    CHECK(rec.flocks[0].dissipation <= 1e-30);

    // N = 2, w = +-1 in 1D under the unit-mass convention: K = 0.5.
    auto s2 = builders::two_agent_line(0.5, 0.5, -1.0, 1.0);
    auto rec2 = compute_record(s2, plain_params());
    CHECK(rec2.unit_mass);
    CHECK(rec2.flocks[0].kinetic == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(rec2.flocks[0].alignment == doctest::Approx(2.0));
    CHECK(rec2.flocks[0].max_deviation == doctest::Approx(1.0));

    MultiFlockState s3;
    s3.dim = 2;
    s3.flocks.push_back(Flock::make(2, {{0.0, 0.0}}, {{0.0, 0.0}}, {1.0},
                                    KernelSpec::constant_kernel(1.0)));
    s3.flocks.push_back(Flock::make(2, {{3.0, 4.0}}, {{0.0, 0.0}}, {1.0},
                                    KernelSpec::constant_kernel(1.0)));
    CHECK(compute_record(s3, plain_params()).global_diameter == doctest::Approx(5.0));
}

TEST_CASE("energy law residual: equilibrium and 2-agent closed form") {
    // Aligned equilibrium: all terms vanish identically.
    auto s = builders::random_state(2u, 1, {4}, KernelSpec::constant_kernel(1.0), true);
    for (auto& v : s.flocks[0].vel) v = 0.8;
    auto traj = reference_integrate(s, plain_params(), 1e-2, 0.1, linspace(0.0, 0.1, 11));
    auto res = energy_law_residual(traj, plain_params());
    for (double r : res) CHECK(std::abs(r) <= 1e-14);

    // 2-agent constant kernel: E = K decays as exp(-2t); the residual of the
    // exact law is pure centered-difference truncation, O(dt^2).
    auto s2 = builders::two_agent_line(0.5, 0.5, -1.0, 1.0);
    const double dt = 1e-3;
    auto traj2 = reference_integrate(s2, plain_params(), 1e-4, 2.0,
                                     linspace(0.0, 2.0, static_cast<int>(2.0 / dt) + 1));
    auto res2 = energy_law_residual(traj2, plain_params());
    for (double r : res2) CHECK(std::abs(r) <= 1e-6);

    // Cross-check the analytic energy value along the run.
    for (std::size_t k = 0; k < traj2.size(); ++k) {
        auto rec = compute_record(traj2[k], plain_params());
        CHECK(rec.flocks[0].energy ==
              doctest::Approx(0.5 * std::exp(-2.0 * traj2[k].time)).epsilon(1e-7));
    }

    CHECK_THROWS_AS(energy_law_residual({traj2[0], traj2[1]}, plain_params()),
                    std::invalid_argument);
}

TEST_CASE("energy law residual: centered-difference order >= 1.8 with attraction") {
    auto s = builders::random_state(3u, 2, {8, 6}, KernelSpec::cucker_smale_kernel(1.0, 0.5), true,
                                    1.0, 1.0, 0.5);
    const auto U = PotentialSpec::shifted_power(0.5, 1.0, 3.0, 0.5);
    for (auto& f : s.flocks) f.potential = U;
    auto params = plain_params(0.1, KernelSpec::cucker_smale_kernel(1.0, 1.0));
    params.mode = Mode::alignment_attraction;

    std::vector<double> dts = {8e-3, 4e-3, 2e-3};
    std::vector<double> worst;
    for (double dt : dts) {
        const int nsamp = static_cast<int>(std::round(1.0 / dt)) + 1;
        auto traj = reference_integrate(s, params, dt / 8.0, 1.0, linspace(0.0, 1.0, nsamp));
        auto res = energy_law_residual(traj, params);
        worst.push_back(*std::max_element(res.begin(), res.end()));
    }
    std::vector<double> logdt, logres;
    for (std::size_t k = 0; k < dts.size(); ++k) {
        logdt.push_back(std::log(dts[k]));
        logres.push_back(std::log(worst[k]));
    }
    const auto fit = oracle::line_fit(logdt, logres);
    CHECK(fit.slope >= 1.8);
}

TEST_CASE("odi_envelope closed forms") {
    // A0 = 0: amplitudes stay zero, diameters constant.
    OdiSystem sys;
    sys.flocks.push_back({1.0, KernelSpec::cucker_smale_kernel(1.0, 1.0)});
    sys.global_coupling = 0.5;
    sys.psi = KernelSpec::constant_kernel(1.0);
    OdiInit init;
    init.A_flock = {0.0};
    init.D_flock = {2.0};
    init.A_global = 0.0;
    init.D_global = 3.0;
    auto env = odi_envelope(sys, init, linspace(0.0, 5.0, 6));
    for (std::size_t k = 0; k < env.t.size(); ++k) {
        CHECK(env.A_flock[0][k] == 0.0);
        CHECK(env.D_flock[0][k] == 2.0);
        CHECK(env.A_global[k] == 0.0);
        CHECK(env.D_global[k] == 3.0);
    }

    // Constant psi: A(t) = A0 exp(-G psi0 t), D(t) = D0 + A0/(G psi0)(1 - exp(..)).
    OdiSystem sys2;
    sys2.flocks.push_back({0.0, KernelSpec::constant_kernel(0.0)});
    sys2.global_coupling = 0.8; // eps * M
    sys2.psi = KernelSpec::constant_kernel(1.5);
    OdiInit init2;
    init2.A_flock = {0.0};
    init2.D_flock = {0.0};
    init2.A_global = 2.0;
    init2.D_global = 1.0;
    auto env2 = odi_envelope(sys2, init2, linspace(0.0, 4.0, 17));
    const double rate = 0.8 * 1.5;
    for (std::size_t k = 0; k < env2.t.size(); ++k) {
        const double t = env2.t[k];
        CHECK(env2.A_global[k] == doctest::Approx(2.0 * std::exp(-rate * t)).epsilon(1e-9));
        CHECK(env2.D_global[k] ==
              doctest::Approx(1.0 + 2.0 / rate * (1.0 - std::exp(-rate * t))).epsilon(1e-9));
    }

    // Single flock, eps = 0, constant phi = c: A_a(t) = A_a0 exp(-lambda M c t).
    OdiSystem sys3;
    sys3.flocks.push_back({2.0, KernelSpec::constant_kernel(0.7)});
    sys3.global_coupling = 0.0;
    sys3.psi = KernelSpec::constant_kernel(1.0);
    OdiInit init3;
    init3.A_flock = {1.0};
    init3.D_flock = {0.5};
    auto env3 = odi_envelope(sys3, init3, linspace(0.0, 3.0, 7));
    for (std::size_t k = 0; k < env3.t.size(); ++k)
        CHECK(env3.A_flock[0][k] ==
              doctest::Approx(std::exp(-2.0 * 0.7 * env3.t[k])).epsilon(1e-9));
}

TEST_CASE("solve_flock_bound: linear, logarithmic and thin-tail cases") {
    auto b1 = solve_flock_bound(KernelSpec::constant_kernel(1.0), 1.0, 1.0, 2.0);
    CHECK(b1.solvable);
    CHECK(b1.D_bar == doctest::Approx(3.0).epsilon(1e-10));

    // phi = 1/r: integral over [1, Dbar] is log(Dbar); target log 2 gives 2.
    auto b2 = solve_flock_bound(KernelSpec::power_singular_kernel(1.0, 0.0), 1.0, 1.0,
                                std::log(2.0));
    CHECK(b2.solvable);
    CHECK(b2.D_bar == doctest::Approx(2.0).epsilon(1e-10));

    // Thin tail with too much amplitude: no bound exists.
    const double tail_mass = std::atan(1.0) * 2.0 - std::atan(1.0); // pi/2 - atan(1)
    auto b3 = solve_flock_bound(KernelSpec::cucker_smale_kernel(1.0, 2.0), 1.0, 1.0,
                                1.01 * tail_mass);
    CHECK_FALSE(b3.solvable);
    auto b4 = solve_flock_bound(KernelSpec::cucker_smale_kernel(1.0, 2.0), 1.0, 1.0,
                                0.5 * tail_mass);
    CHECK(b4.solvable);

    // A0 = 0: the bound is the initial diameter itself.
    auto b5 = solve_flock_bound(KernelSpec::cucker_smale_kernel(1.0, 1.0), 2.0, 1.5, 0.0);
    CHECK(b5.solvable);
    CHECK(b5.D_bar == 1.5);
}

TEST_CASE("fit_decay_rate: synthetic series") {
    auto t = linspace(0.0, 5.0, 51);
    std::vector<double> clean, wobbly, flat;
    for (double tt : t) {
        clean.push_back(std::exp(-2.0 * tt));
        wobbly.push_back(3.0 * std::exp(-0.5 * tt) * (1.0 + 0.01 * std::sin(tt)));
        flat.push_back(4.2);
    }
    auto r1 = fit_decay_rate(t, clean, 0.0, 5.0);
    CHECK(r1.rate == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(r1.r2 == doctest::Approx(1.0).epsilon(1e-12));

    auto r2 = fit_decay_rate(t, wobbly, 0.0, 5.0);
    CHECK(r2.rate >= 0.48);
    CHECK(r2.rate <= 0.52);

    auto r3 = fit_decay_rate(t, flat, 0.0, 5.0);
    CHECK(std::abs(r3.rate) <= 1e-12);

    std::vector<double> bad = clean;
    bad[20] = -1.0;
    CHECK_THROWS_AS(fit_decay_rate(t, bad, 0.0, 5.0), DomainError);
    CHECK_THROWS_AS(fit_decay_rate(t, clean, 0.0, 0.5), std::invalid_argument); // < 10 samples

    // Auto window stays above the round-off floor.
    auto tlong = linspace(0.0, 60.0, 601);
    std::vector<double> deep;
    for (double tt : tlong) deep.push_back(std::exp(-1.5 * tt) + 1e-17);
    auto r4 = fit_decay_rate_auto(tlong, deep);
    CHECK(r4.rate == doctest::Approx(1.5).epsilon(1e-2));
}

TEST_CASE("algebraic_decay_check: power-law series") {
    auto t = linspace(10.0, 100.0, 200);
    std::vector<double> p1, p09;
    for (double tt : t) {
        const double bracket = std::sqrt(1.0 + tt * tt);
        p1.push_back(std::pow(bracket, -1.0));
        p09.push_back(std::pow(bracket, -0.9));
    }
    auto c1 = algebraic_decay_check(t, p1, 1.0, 10.0, 100.0);
    CHECK(c1.p_hat == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(c1.pass);
    auto c2 = algebraic_decay_check(t, p09, 0.9, 10.0, 100.0);
    CHECK(c2.p_hat >= 0.85);
    CHECK(c2.p_hat <= 0.95);
}

TEST_CASE("diameter growth exponents follow the attraction a-priori table") {
    CHECK(diameter_growth_exponent(1.0) == 1.0);
    CHECK(diameter_growth_exponent(1.2) == 1.0);
    CHECK(diameter_growth_exponent(4.0 / 3.0) == doctest::Approx(1.0)); // 2/(4-2) = 1 at the seam
    CHECK(diameter_growth_exponent(1.5) == doctest::Approx(0.8));
    CHECK(diameter_growth_exponent(2.0) == 0.5);
    CHECK(diameter_growth_exponent(3.0) == 0.5);

    // Bounded-diameter run: fitted growth exponent ~ 0.
    auto t = linspace(1.0, 50.0, 100);
    std::vector<double> flatD(t.size(), 2.0);
    auto g = diameter_growth_check(t, flatD, 3.0, 1.0, 50.0);
    CHECK(std::abs(g.d_hat) <= 0.05);
    CHECK(g.pass);
}

TEST_CASE("envelope domination on a simulated alignment run") {
    auto s0 = builders::random_state(9u, 2, {6, 4}, KernelSpec::cucker_smale_kernel(1.0, 0.7),
                                     false, 1.0, 1.5, 0.8);
    auto params = plain_params(0.15, KernelSpec::cucker_smale_kernel(1.0, 1.0));
    IntegratorSpec ispec;
    ispec.t_end = 8.0;
    auto res = integrate(s0, params, ispec, linspace(0.0, 8.0, 81));

    auto rec0 = compute_record(res.samples.front(), params);
    auto env = odi_envelope(OdiSystem::from(s0, params), OdiInit::from(rec0),
                            times_of(res.samples));
    const double cushion = 1e-6 + 10.0 * (ispec.atol + ispec.rtol);
    for (std::size_t k = 0; k < res.samples.size(); ++k) {
        auto rec = compute_record(res.samples[k], params);
        for (int a = 0; a < 2; ++a) {
            CHECK(rec.flocks[a].alignment <= env.A_flock[a][k] * (1.0 + 1e-9) + cushion);
            CHECK(rec.flocks[a].diameter <= env.D_flock[a][k] * (1.0 + 1e-9) + cushion);
        }
        CHECK(rec.global_alignment <= env.A_global[k] * (1.0 + 1e-9) + cushion);
        CHECK(rec.global_diameter <= env.D_global[k] * (1.0 + 1e-9) + cushion);
    }
}

TEST_CASE("Lyapunov function is non-increasing along super-agent trajectories") {
    MultiFlockState s0;
    s0.dim = 2;
    s0.flocks.push_back(Flock::make(2, {{0.0, 0.0}}, {{1.0, 0.0}}, {1.0},
                                    KernelSpec::constant_kernel(1.0)));
    s0.flocks.push_back(Flock::make(2, {{4.0, 0.0}}, {{-0.5, 0.5}}, {2.0},
                                    KernelSpec::constant_kernel(1.0)));
    s0.flocks.push_back(Flock::make(2, {{0.0, 5.0}}, {{0.0, -1.0}}, {1.5},
                                    KernelSpec::constant_kernel(1.0)));
    auto params = plain_params(0.2, KernelSpec::cucker_smale_kernel(1.0, 1.0));
    IntegratorSpec ispec;
    ispec.t_end = 10.0;
    auto res = integrate(s0, params, ispec, linspace(0.0, 10.0, 101));
    const double G = params.epsilon * 4.5; // eps * total mass
    double prev = 1e300;
    for (const auto& st : res.samples) {
        auto rec = compute_record(st, params);
        const double L =
            lyapunov_value(params.psi, G, rec.global_alignment, rec.global_diameter);
        CHECK(L <= prev + 10.0 * (ispec.atol + ispec.rtol * std::abs(prev)));
        prev = std::min(prev, L);
    }
}

TEST_CASE("rate floor and strong flocking for a single fat-tailed flock") {
    auto s0 = builders::random_state(10u, 2, {12}, KernelSpec::cucker_smale_kernel(1.0, 1.0),
                                     true, 1.0, 0.8, 0.5);
    auto params = plain_params();
    IntegratorSpec ispec;
    ispec.t_end = 20.0;
    auto res = integrate(s0, params, ispec, linspace(0.0, 20.0, 201));

    std::vector<double> maxdev, t;
    for (const auto& st : res.samples) {
        auto rec = compute_record(st, params);
        maxdev.push_back(rec.flocks[0].max_deviation);
        t.push_back(st.time);
    }
    auto rec0 = compute_record(res.samples.front(), params);
    auto bound = solve_flock_bound(s0.flocks[0].phi, 1.0 /* lambda * M */,
                                   rec0.flocks[0].diameter, rec0.flocks[0].alignment);
    REQUIRE(bound.solvable);
    const double floor = evaluate_kernel(s0.flocks[0].phi, bound.D_bar); // lambda M phi(Dbar)
    auto est = fit_decay_rate_auto(t, maxdev);
    CHECK(est.rate >= 0.95 * floor);
    // Diameter never exceeds the Lyapunov bound.
    for (const auto& st : res.samples)
        CHECK(compute_record(st, params).flocks[0].diameter <= bound.D_bar * (1.0 + 1e-3));

    // Strong flocking: displacements stabilize at the fitted velocity rate.
    auto cauchy = displacement_cauchy_series(res.samples);
    const std::size_t k0 = res.samples.size() / 5;
    const double C = cauchy[k0] * std::exp(est.rate * t[k0]) * 1.5;
    for (std::size_t k = k0; k < res.samples.size() * 4 / 5; ++k)
        CHECK(cauchy[k] <= C * std::exp(-est.rate * t[k]) + 1e-9);
}

TEST_CASE("asymptotic slow-rate scale: qualitative monotonicity in eps") {
    // Reference formula only: increasing in eps for each zeta, and the
    // fitted global rates of an actual two-flock run order the same way.
    for (double zeta : {0.25, 0.5, 1.0}) {
        double prev = 0.0;
        for (double eps : {0.02, 0.05, 0.1, 0.2}) {
            const double scale = asymptotic_slow_rate_scale(eps, zeta);
            CHECK(scale > prev);
            prev = scale;
        }
    }
    auto fitted_rate = [&](double eps) {
        MultiFlockState s0;
        s0.dim = 1;
        s0.flocks.push_back(Flock::make(1, {{0.0}}, {{-0.5}}, {1.0},
                                        KernelSpec::constant_kernel(0.0)));
        s0.flocks.push_back(Flock::make(1, {{2.0}}, {{0.5}}, {1.0},
                                        KernelSpec::constant_kernel(0.0)));
        ModelParams p;
        p.epsilon = eps;
        p.psi = KernelSpec::cucker_smale_kernel(1.0, 1.0);
        IntegratorSpec is;
        is.t_end = 40.0;
        auto res = integrate(s0, p, is, linspace(0.0, 40.0, 161));
        std::vector<double> t, gdev;
        for (const auto& st : res.samples) {
            auto rec = compute_record(st, p);
            t.push_back(st.time);
            gdev.push_back(rec.global_max_deviation);
        }
        return fit_decay_rate_auto(t, gdev).rate;
    };
    const double r1 = fitted_rate(0.05), r2 = fitted_rate(0.1);
    CHECK(r1 > 0.0);
    CHECK(r2 > r1);
}

TEST_CASE("collision energy functional uses the subset diameters") {
    MultiFlockState s;
    s.dim = 1;
    s.flocks.push_back(Flock::make(1, {{0.0}, {0.5}, {10.0}}, {{1.0}, {-1.0}, {0.0}},
                                   {1.0, 1.0, 1.0}, KernelSpec::power_singular_kernel(1.0, 0.0)));
    // Subset {0, 1}: A* = 2, D* = 0.5, integral over [0.5, 1] of 1/r = log 2.
    const double e = collision_energy(s, 0, {0, 1}, 3.0);
    CHECK(e == doctest::Approx(2.0 + 3.0 * std::log(2.0)).epsilon(1e-12));
}
