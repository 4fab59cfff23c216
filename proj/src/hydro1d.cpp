#include "multiflock/hydro1d.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace mflock {

double HydroFlock1D::total_mass() const {
    double M = 0.0;
    for (double mi : m) M += mi;
    return M;
}

void HydroFlock1D::validate() const {
    if (!phi.is_w2inf())
        throw std::invalid_argument(
            "hydro kernel must be a bounded W^{2,inf} family (constant or cucker_smale)");
    const std::size_t N = x.size();
    if (N < 2) throw std::invalid_argument("hydro flock needs >= 2 particles");
    if (v.size() != N || e.size() != N || rho.size() != N || m.size() != N)
        throw std::invalid_argument("hydro particle arrays length mismatch");
    for (std::size_t i = 0; i + 1 < N; ++i)
        if (!(x[i] < x[i + 1]))
            throw std::invalid_argument("hydro particle positions must be strictly increasing");
    for (std::size_t i = 0; i < N; ++i) {
        if (!(m[i] > 0.0)) throw std::invalid_argument("hydro mass weights must be positive");
        if (!(rho[i] > 0.0)) throw std::invalid_argument("hydro densities must be positive");
    }
    if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
}

HydroFlock1D init_from_profiles(const std::function<double(double)>& rho0,
                                const std::function<double(double)>& u0, double x_lo, double x_hi,
                                int grid_points, int n_particles, KernelSpec phi, double lambda) {
    if (grid_points < 3 || !(x_hi > x_lo))
        throw std::invalid_argument("init_from_profiles: bad grid");
    if (n_particles < 2) throw std::invalid_argument("init_from_profiles: need >= 2 particles");
    const int G = grid_points;
    const double h = (x_hi - x_lo) / (G - 1);
    std::vector<double> xg(G), rg(G), ug(G);
    for (int k = 0; k < G; ++k) {
        xg[k] = x_lo + k * h;
        rg[k] = rho0(xg[k]);
        ug[k] = u0(xg[k]);
        if (!(rg[k] >= 0.0)) throw DomainError("rho0 must be nonnegative");
    }
    // Trapezoid CDF; exact quantile inversion within each linear-density cell.
    std::vector<double> cdf(G, 0.0);
    for (int k = 1; k < G; ++k) cdf[k] = cdf[k - 1] + 0.5 * (rg[k - 1] + rg[k]) * h;
    const double M = cdf.back();
    if (!(M > 0.0)) throw DomainError("rho0 has zero total mass on the grid");

    // Sampled derivative of u0 (centered differences, one-sided at the ends).
    std::vector<double> upg(G);
    upg[0] = (ug[1] - ug[0]) / h;
    upg[G - 1] = (ug[G - 1] - ug[G - 2]) / h;
    for (int k = 1; k < G - 1; ++k) upg[k] = (ug[k + 1] - ug[k - 1]) / (2.0 * h);
    auto interp = [&](const std::vector<double>& f, double xq) {
        if (xq <= xg.front()) return f.front();
        if (xq >= xg.back()) return f.back();
        const int k = std::min(G - 2, static_cast<int>((xq - x_lo) / h));
        const double s = (xq - xg[k]) / h;
        return f[k] + s * (f[k + 1] - f[k]);
    };

    HydroFlock1D f;
    f.phi = std::move(phi);
    f.lambda = lambda;
    f.x.resize(n_particles);
    const double mi = M / n_particles;
    for (int i = 0; i < n_particles; ++i) {
        const double target = (i + 0.5) * mi;
        const int k = static_cast<int>(std::upper_bound(cdf.begin(), cdf.end(), target) -
                                       cdf.begin()) - 1;
        const int kk = std::clamp(k, 0, G - 2);
        const double need = target - cdf[kk];
        const double r0 = rg[kk], r1 = rg[kk + 1];
        double s;
        if (std::abs(r1 - r0) < 1e-14 * std::max(1.0, r0)) {
            s = r0 > 0.0 ? need / (h * r0) : 0.5;
        } else {
            const double a = 0.5 * (r1 - r0), b = r0, c = -need / h;
            s = (-b + std::sqrt(std::max(0.0, b * b - 4.0 * a * c))) / (2.0 * a);
        }
        f.x[i] = xg[kk] + std::clamp(s, 0.0, 1.0) * h;
    }
    for (int i = 0; i + 1 < n_particles; ++i)
        if (!(f.x[i] < f.x[i + 1]))
            throw DomainError("quantile positions are not strictly increasing (grid too coarse)");

    f.m.assign(n_particles, mi);
    f.v.resize(n_particles);
    f.rho.resize(n_particles);
    f.e.resize(n_particles);
    for (int i = 0; i < n_particles; ++i) {
        f.v[i] = u0(f.x[i]);
        f.rho[i] = std::max(rho0(f.x[i]), 1e-300);
    }
    // The convolution uses the same particle quadrature the solver evolves
    // with, so e starts exactly on the discrete defining relation (a grid
    // trapezoid here would seed an O(1/N^2) static offset into the
    // e-transport consistency check).
    const auto conv = convolution_at_particles(f);
    for (int i = 0; i < n_particles; ++i) f.e[i] = interp(upg, f.x[i]) + conv[i];
    f.validate();
    return f;
}

std::vector<double> convolution_at_particles(const HydroFlock1D& f) {
    const int n = f.n();
    std::vector<double> conv(n, 0.0);
    for (int i = 0; i < n; ++i) conv[i] = f.m[i] * evaluate_kernel(f.phi, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double dx = f.x[j] - f.x[i];
            const double w = evaluate_kernel_r2(f.phi, dx * dx);
            conv[i] += f.m[j] * w;
            conv[j] += f.m[i] * w;
        }
    }
    for (double& c : conv) c *= f.lambda;
    return conv;
}

MacroObservables hydro_macro(const std::vector<HydroFlock1D>& flocks) {
    const int A = static_cast<int>(flocks.size());
    MacroObservables macro;
    macro.dim = 1;
    macro.flock_mass.assign(A, 0.0);
    macro.X.assign(A, 0.0);
    macro.V.assign(A, 0.0);
    macro.momentum_avg.assign(1, 0.0);
    for (int a = 0; a < A; ++a) {
        double M = 0.0, sx = 0.0, sv = 0.0;
        for (int i = 0; i < flocks[a].n(); ++i) {
            M += flocks[a].m[i];
            sx += flocks[a].m[i] * flocks[a].x[i];
            sv += flocks[a].m[i] * flocks[a].v[i];
        }
        macro.flock_mass[a] = M;
        macro.X[a] = sx / M;
        macro.V[a] = sv / M;
        macro.total_mass += M;
        macro.momentum_avg[0] += sv;
    }
    macro.momentum_avg[0] /= macro.total_mass;
    return macro;
}

namespace {

struct HydroLayout {
    std::vector<std::size_t> offset; // per flock
    std::size_t total = 0;
};

HydroLayout layout_of(const std::vector<HydroFlock1D>& flocks) {
    HydroLayout lay;
    for (const auto& f : flocks) {
        lay.offset.push_back(lay.total);
        lay.total += 4 * static_cast<std::size_t>(f.n());
    }
    return lay;
}

void pack(const std::vector<HydroFlock1D>& flocks, const HydroLayout& lay,
          std::vector<double>& y) {
    y.resize(lay.total);
    for (std::size_t a = 0; a < flocks.size(); ++a) {
        const auto& f = flocks[a];
        const std::size_t n = f.x.size(), o = lay.offset[a];
        std::copy(f.x.begin(), f.x.end(), y.begin() + o);
        std::copy(f.v.begin(), f.v.end(), y.begin() + o + n);
        std::copy(f.e.begin(), f.e.end(), y.begin() + o + 2 * n);
        std::copy(f.rho.begin(), f.rho.end(), y.begin() + o + 3 * n);
    }
}

void unpack(const std::vector<double>& y, const HydroLayout& lay,
            std::vector<HydroFlock1D>& flocks) {
    for (std::size_t a = 0; a < flocks.size(); ++a) {
        auto& f = flocks[a];
        const std::size_t n = f.x.size(), o = lay.offset[a];
        std::copy(y.begin() + o, y.begin() + o + n, f.x.begin());
        std::copy(y.begin() + o + n, y.begin() + o + 2 * n, f.v.begin());
        std::copy(y.begin() + o + 2 * n, y.begin() + o + 3 * n, f.e.begin());
        std::copy(y.begin() + o + 3 * n, y.begin() + o + 4 * n, f.rho.begin());
    }
}

void hydro_rhs(const std::vector<double>& y, const HydroLayout& lay,
               std::vector<HydroFlock1D>& scratch, const ModelParams& params,
               HydroCoupling coupling, std::vector<double>& dy) {
    unpack(y, lay, scratch);
    const int A = static_cast<int>(scratch.size());
    const MacroObservables macro = hydro_macro(scratch);
    dy.assign(lay.total, 0.0);
    for (int a = 0; a < A; ++a) {
        const auto& f = scratch[a];
        const std::size_t n = f.x.size(), o = lay.offset[a];
        const double Ra = damping_coefficient(macro, params, a);
        const double epsRa = params.epsilon * Ra;

        std::vector<double> conv(n, 0.0), align(n, 0.0);
        const double phi0 = evaluate_kernel(f.phi, 0.0);
        for (std::size_t i = 0; i < n; ++i) conv[i] = f.m[i] * phi0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                const double dx = f.x[j] - f.x[i];
                const double w = evaluate_kernel_r2(f.phi, dx * dx);
                conv[i] += f.m[j] * w;
                conv[j] += f.m[i] * w;
                const double dvij = f.v[j] - f.v[i];
                align[i] += f.m[j] * w * dvij;
                align[j] -= f.m[i] * w * dvij;
            }
        }

        // Inter-flock force per particle (two algebraically equal groupings).
        double drift = 0.0; // shifted form: eps sum M_b psi (V_b - V_a)
        if (coupling == HydroCoupling::shifted_frame && params.epsilon > 0.0) {
            for (int b = 0; b < A; ++b) {
                if (b == a) continue;
                drift += params.epsilon * macro.flock_mass[b] *
                         evaluate_kernel(params.psi, std::abs(macro.X[a] - macro.X[b])) *
                         (macro.V[b] - macro.V[a]);
            }
        }

        for (std::size_t i = 0; i < n; ++i) {
            const double lamconv = f.lambda * conv[i];
            dy[o + i] = f.v[i];
            double force = f.lambda * align[i];
            if (params.epsilon > 0.0) {
                if (coupling == HydroCoupling::original_frame) {
                    for (int b = 0; b < A; ++b) {
                        if (b == a) continue;
                        force += params.epsilon * macro.flock_mass[b] *
                                 evaluate_kernel(params.psi,
                                                 std::abs(macro.X[a] - macro.X[b])) *
                                 (macro.V[b] - f.v[i]);
                    }
                } else {
                    force += -epsRa * (f.v[i] - macro.V[a]) + drift;
                }
            }
            dy[o + n + i] = force;
            dy[o + 2 * n + i] = (epsRa + f.e[i]) * (lamconv - f.e[i]);
            dy[o + 3 * n + i] = -f.rho[i] * (f.e[i] - lamconv);
        }
    }
}

// The crossing error's time field is step-local; run_hydro rethrows the
// event with the absolute time.
void check_ordering(const std::vector<HydroFlock1D>& flocks, double t_local) {
    for (std::size_t a = 0; a < flocks.size(); ++a)
        for (int i = 0; i + 1 < flocks[a].n(); ++i)
            if (!(flocks[a].x[i] < flocks[a].x[i + 1]))
                throw ParticleCrossingError("hydro particles crossed (classical smoothness lost)",
                                            static_cast<int>(a), i, t_local);
}

} // namespace

void step_hydro(std::vector<HydroFlock1D>& flocks, const ModelParams& params, double dt,
                HydroCoupling coupling) {
    if (!(dt > 0.0)) throw std::invalid_argument("step_hydro: dt must be > 0");
    params.validate();
    const HydroLayout lay = layout_of(flocks);
    std::vector<HydroFlock1D> scratch = flocks;
    std::vector<double> y, k1, k2, k3, k4, tmp;
    pack(flocks, lay, y);
    const std::size_t n = y.size();
    tmp.resize(n);
    hydro_rhs(y, lay, scratch, params, coupling, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * dt * k1[i];
    hydro_rhs(tmp, lay, scratch, params, coupling, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * dt * k2[i];
    hydro_rhs(tmp, lay, scratch, params, coupling, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + dt * k3[i];
    hydro_rhs(tmp, lay, scratch, params, coupling, k4);
    for (std::size_t i = 0; i < n; ++i)
        y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    unpack(y, lay, flocks);
    check_ordering(flocks, dt);
}

HydroRunResult run_hydro(std::vector<HydroFlock1D> flocks, const ModelParams& params, double dt,
                         double t_end, int n_samples, HydroCoupling coupling) {
    if (n_samples < 2) throw std::invalid_argument("run_hydro: need >= 2 samples");
    for (auto& f : flocks) f.validate();
    params.validate();
    HydroRunResult res;
    double t = 0.0;
    int next_sample = 0;
    auto emit = [&]() {
        while (next_sample < n_samples &&
               t >= t_end * next_sample / (n_samples - 1) - 1e-12 * std::max(1.0, t_end)) {
            res.t.push_back(t_end * next_sample / (n_samples - 1));
            res.samples.push_back(flocks);
            ++next_sample;
        }
    };
    emit();
    auto min_e = [&]() {
        double me = std::numeric_limits<double>::infinity();
        for (const auto& f : flocks)
            for (double ei : f.e) me = std::min(me, ei);
        return me;
    };
    double cur_min_e = min_e();
    while (t < t_end - 1e-12 * t_end && next_sample < n_samples) {
        double h = std::min(dt, t_end - t);
        const double target = t_end * next_sample / (n_samples - 1);
        if (target > t) h = std::min(h, target - t);
        // Resolve the stiff plunge of e near blowup (|e| ~ 1/(t*-t)): keep
        // |e| h small so the -1e6 crossing is sampled before the particle
        // gaps (which contract like ~1/|e|) are stepped through zero. e can
        // double within one step, so leave headroom below the RK4 stability
        // margin.
        if (cur_min_e < -10.0) h = std::min(h, 0.1 / -cur_min_e);
        try {
            step_hydro(flocks, params, h, coupling);
        } catch (const ParticleCrossingError& ex) {
            res.crossed = true;
            res.stop_time = t;
            res.log.events.push_back({t, EventKind::blowup_suspected,
                                      std::string("particle crossing: ") + ex.what()});
            return res;
        }
        t += h;
        const double me = cur_min_e = min_e();
        if (!res.e_crossing_time && me <= -1e6) {
            res.e_crossing_time = t;
            res.e_at_crossing = me;
        }
        if (me <= -1e9 || !std::isfinite(me)) {
            res.blew_up = true;
            res.stop_time = t;
            res.log.events.push_back(
                {t, EventKind::blowup_suspected, "e fell below -1e9 (finite-time blowup)"});
            return res;
        }
        emit();
    }
    res.stop_time = t;
    return res;
}

ThresholdVerdict threshold_verdict(const std::vector<HydroFlock1D>& flocks,
                                   const ModelParams& params) {
    ThresholdVerdict v;
    v.min_e = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < flocks.size(); ++a)
        for (int i = 0; i < flocks[a].n(); ++i)
            if (flocks[a].e[i] < v.min_e) {
                v.min_e = flocks[a].e[i];
                v.witness_flock = static_cast<int>(a);
                v.witness_particle = i;
            }
    const MacroObservables macro = hydro_macro(flocks);
    const double psi0 = params.epsilon > 0.0 ? evaluate_kernel(params.psi, 0.0) : 0.0;
    v.band_floor = -params.epsilon * macro.total_mass * psi0;
    if (v.min_e >= 0.0)
        v.classification = HydroClass::global_guaranteed;
    else if (v.min_e < v.band_floor)
        v.classification = HydroClass::blowup_guaranteed;
    else
        v.classification = HydroClass::indeterminate_band;

    // Sharper existence floor -eps M psi(Dbar) for fat-tailed psi.
    if (params.epsilon > 0.0 && flocks.size() >= 2 && params.psi.is_analytic() &&
        classify_tail(params.psi) == TailClass::fat_tail) {
        double D0 = 0.0, A0 = 0.0;
        const int A = static_cast<int>(flocks.size());
        for (int a = 0; a < A; ++a)
            for (int b = a + 1; b < A; ++b) {
                D0 = std::max(D0, std::abs(macro.X[a] - macro.X[b]));
                A0 = std::max(A0, std::abs(macro.V[a] - macro.V[b]));
            }
        const auto bound =
            solve_flock_bound(params.psi, params.epsilon * macro.total_mass, D0, A0);
        if (bound.solvable) {
            const double floor =
                -params.epsilon * macro.total_mass * evaluate_kernel(params.psi, bound.D_bar);
            v.improved_floor = floor;
            if (v.min_e >= floor)
                v.improved_classification = HydroClass::global_guaranteed;
            else if (v.min_e < v.band_floor)
                v.improved_classification = HydroClass::blowup_guaranteed;
            else
                v.improved_classification = HydroClass::indeterminate_band;
        }
    }
    return v;
}

std::optional<BlowupReport> detect_blowup(const HydroRunResult& run) {
    if (!run.e_crossing_time) return std::nullopt;
    BlowupReport rep;
    rep.first_crossing_time = *run.e_crossing_time;
    // Near blowup de/dt ~ -e^2, so the remaining time is ~ 1/|e|.
    rep.estimated_blowup_time = rep.first_crossing_time + 1.0 / std::abs(run.e_at_crossing);
    return rep;
}

ProfileConvergence profile_convergence(const HydroRunResult& run, int flock, int grid_points) {
    if (run.blew_up || run.crossed)
        throw std::invalid_argument("profile_convergence requires a globally classical run");
    if (run.samples.empty()) throw std::invalid_argument("empty hydro run");
    const int S = static_cast<int>(run.samples.size());

    // Moving-frame grid covering every sample's support with a margin.
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& snap : run.samples) {
        const auto& f = snap[flock];
        double M = 0.0, sx = 0.0;
        for (int i = 0; i < f.n(); ++i) {
            M += f.m[i];
            sx += f.m[i] * f.x[i];
        }
        const double X = sx / M;
        lo = std::min(lo, f.x.front() - X);
        hi = std::max(hi, f.x.back() - X);
    }
    const double margin = 0.05 * (hi - lo);
    lo -= margin;
    hi += margin;

    ProfileConvergence prof;
    prof.t = run.t;
    prof.grid_x.resize(grid_points);
    for (int g = 0; g < grid_points; ++g)
        prof.grid_x[g] = lo + (hi - lo) * g / (grid_points - 1);

    auto resample = [&](const HydroFlock1D& f, std::vector<double>& rho_g,
                        std::vector<double>& u_g) {
        double M = 0.0, sx = 0.0;
        for (int i = 0; i < f.n(); ++i) {
            M += f.m[i];
            sx += f.m[i] * f.x[i];
        }
        const double X = sx / M;
        rho_g.assign(grid_points, 0.0);
        u_g.assign(grid_points, 0.0);
        for (int g = 0; g < grid_points; ++g) {
            const double xq = prof.grid_x[g] + X;
            if (xq < f.x.front() || xq > f.x.back()) continue;
            const auto it = std::upper_bound(f.x.begin(), f.x.end(), xq);
            const int j = std::clamp(static_cast<int>(it - f.x.begin()) - 1, 0, f.n() - 2);
            const double s = (xq - f.x[j]) / (f.x[j + 1] - f.x[j]);
            rho_g[g] = f.rho[j] + s * (f.rho[j + 1] - f.rho[j]);
            u_g[g] = f.v[j] + s * (f.v[j + 1] - f.v[j]);
        }
        // Mass-conserving rescale of the reconstruction.
        double mass = 0.0;
        const double hg = (hi - lo) / (grid_points - 1);
        for (int g = 0; g + 1 < grid_points; ++g) mass += 0.5 * (rho_g[g] + rho_g[g + 1]) * hg;
        if (mass > 0.0)
            for (double& r : rho_g) r *= M / mass;
    };

    std::vector<double> rho_end, u_end;
    resample(run.samples.back()[flock], rho_end, u_end);
    prof.rho_final = rho_end;
    prof.u_final = u_end;

    prof.rho_cauchy.resize(S);
    prof.sup_uprime.resize(S);
    prof.sup_u2prime.resize(S);
    std::vector<double> rho_g, u_g;
    for (int k = 0; k < S; ++k) {
        const auto& f = run.samples[k][flock];
        resample(f, rho_g, u_g);
        double worst = 0.0;
        for (int g = 0; g < grid_points; ++g)
            worst = std::max(worst, std::abs(rho_g[g] - rho_end[g]));
        prof.rho_cauchy[k] = worst;

        const auto conv = convolution_at_particles(f);
        std::vector<double> vp(f.n());
        double sup1 = 0.0;
        for (int i = 0; i < f.n(); ++i) {
            vp[i] = f.e[i] - conv[i];
            sup1 = std::max(sup1, std::abs(vp[i]));
        }
        double sup2 = 0.0;
        for (int i = 0; i + 1 < f.n(); ++i)
            sup2 = std::max(sup2, std::abs(vp[i + 1] - vp[i]) / (f.x[i + 1] - f.x[i]));
        prof.sup_uprime[k] = sup1;
        prof.sup_u2prime[k] = sup2;
    }

    // Rate fits on windows clear of both the initial transient and the
    // trailing zeros (the Cauchy difference vanishes at t_end by definition).
    const double T = run.t.back();
    auto safe_fit = [&](const std::vector<double>& series, double f0, double f1) {
        RateEstimate est;
        try {
            est = fit_decay_rate(run.t, series, f0 * T, f1 * T);
        } catch (const std::exception&) {
            est.rate = 0.0;
            est.r2 = 0.0;
        }
        return est;
    };
    prof.rho_rate = safe_fit(prof.rho_cauchy, 0.02, 0.7);
    prof.uprime_rate = safe_fit(prof.sup_uprime, 0.05, 0.6);
    prof.u2prime_rate = safe_fit(prof.sup_u2prime, 0.05, 0.6);
    return prof;
}

double e_consistency_residual(const HydroFlock1D& f) {
    const auto conv = convolution_at_particles(f);
    double rho_max = 0.0;
    for (double r : f.rho) rho_max = std::max(rho_max, r);
    double worst = 0.0;
    for (int i = 1; i + 1 < f.n(); ++i) {
        // Quantile spacing is coarse where the density vanishes; restrict the
        // check to the resolved region.
        if (f.rho[i] < 0.1 * rho_max) continue;
        // Quadratic-exact three-point derivative on the uneven particle grid.
        const double dp = f.x[i + 1] - f.x[i], dm = f.x[i] - f.x[i - 1];
        const double vp = (dm * dm * f.v[i + 1] - dp * dp * f.v[i - 1] +
                           (dp * dp - dm * dm) * f.v[i]) /
                          (dp * dm * (dp + dm));
        const double res = std::abs(f.e[i] - (vp + conv[i])) / (1.0 + std::abs(f.e[i]));
        worst = std::max(worst, res);
    }
    return worst;
}

double density_spacing_residual(const HydroFlock1D& f, double floor_frac) {
    double rho_max = 0.0;
    for (double r : f.rho) rho_max = std::max(rho_max, r);
    double worst = 0.0;
    // The mass between adjacent quantile particles is exactly the shared
    // half-cells (m_i + m_{i+1})/2, so m/dx is the interval-average density;
    // compare against the carried values averaged over the same interval.
    for (int i = 0; i + 1 < f.n(); ++i) {
        const double mid = 0.5 * (f.rho[i] + f.rho[i + 1]);
        if (mid < floor_frac * rho_max) continue;
        const double est = 0.5 * (f.m[i] + f.m[i + 1]) / (f.x[i + 1] - f.x[i]);
        worst = std::max(worst, std::abs(est - mid) / mid);
    }
    return worst;
}

void write_hydro_snapshot_csv(std::ostream& os, const std::vector<HydroFlock1D>& flocks) {
    os << "flock_id,particle_id,m,x,v,e,rho\n";
    char buf[32];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << ',' << buf;
    };
    for (std::size_t a = 0; a < flocks.size(); ++a) {
        const auto& f = flocks[a];
        for (int i = 0; i < f.n(); ++i) {
            os << a << ',' << i;
            put(f.m[i]);
            put(f.x[i]);
            put(f.v[i]);
            put(f.e[i]);
            put(f.rho[i]);
            os << "\n";
        }
    }
}

void write_hydro_grid_csv(std::ostream& os, const ProfileConvergence& prof) {
    os << "x_grid,rho,u\n";
    char buf[32];
    for (std::size_t g = 0; g < prof.grid_x.size(); ++g) {
        std::snprintf(buf, sizeof buf, "%.17g", prof.grid_x[g]);
        os << buf << ',';
        std::snprintf(buf, sizeof buf, "%.17g", prof.rho_final[g]);
        os << buf << ',';
        std::snprintf(buf, sizeof buf, "%.17g", prof.u_final[g]);
        os << buf << "\n";
    }
}

} // namespace mflock
