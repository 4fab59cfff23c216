#include "multiflock/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace mflock {

namespace {

double vec_norm(const double* comps, std::size_t stride, int dim, std::size_t idx) {
    double r2 = 0.0;
    for (int k = 0; k < dim; ++k) {
        const double c = comps[static_cast<std::size_t>(k) * stride + idx];
        r2 += c * c;
    }
    return std::sqrt(r2);
}

double pair_norm(const std::vector<double>& v, int n, int dim, int i, int j) {
    double r2 = 0.0;
    for (int k = 0; k < dim; ++k) {
        const double c = v[static_cast<std::size_t>(k) * n + i] -
                         v[static_cast<std::size_t>(k) * n + j];
        r2 += c * c;
    }
    return std::sqrt(r2);
}

} // namespace

DiagnosticsRecord compute_record(const MultiFlockState& state, const ModelParams& params) {
    const int A = state.flock_count();
    const int d = state.dim;
    const MacroObservables macro = macro_observables(state);
    const ShiftedState shifted = to_shifted_frame(state, macro);

    DiagnosticsRecord rec;
    rec.time = state.time;
    rec.flocks.resize(A);
    rec.unit_mass = true;

    for (int a = 0; a < A; ++a) {
        const Flock& f = state.flocks[a];
        const auto& sf = shifted.flocks[a];
        FlockDiagnostics& fd = rec.flocks[a];
        rec.unit_mass = rec.unit_mass && f.unit_mass_convention();
        const double M = macro.flock_mass[a];

        for (int i = 0; i < f.n; ++i) {
            const double wi = vec_norm(sf.w.data(), f.n, d, i);
            fd.kinetic += 0.5 * f.mass[i] * wi * wi;
            fd.max_deviation = std::max(fd.max_deviation, wi);
            double yw = 0.0;
            for (int k = 0; k < d; ++k)
                yw += sf.y_at(i, k) * sf.w_at(i, k);
            fd.momentum_corrector += f.mass[i] * yw;
        }
        fd.kinetic /= M;
        fd.momentum_corrector /= M;

        std::vector<double> particle_potential(f.n, 0.0);
        for (int i = 0; i < f.n; ++i) {
            for (int j = i + 1; j < f.n; ++j) {
                const double r = std::sqrt(pair_dist_sq(f, d, i, j));
                const double wdiff = pair_norm(sf.w, f.n, d, i, j);
                fd.diameter = std::max(fd.diameter, r);
                fd.alignment = std::max(fd.alignment, wdiff);
                if (f.lambda > 0.0 && wdiff > 0.0) {
                    // Skip exactly-aligned coincident pairs: they contribute
                    // no dissipation even under a singular kernel.
                    const double phi = evaluate_kernel(f.phi, r);
                    fd.dissipation += f.lambda / M * f.mass[i] * f.mass[j] * phi * wdiff * wdiff;
                }
                if (f.potential) {
                    const double U = evaluate_potential(*f.potential, r).U;
                    fd.potential += f.mass[i] * f.mass[j] * U / (M * M);
                    particle_potential[i] += f.mass[j] * U / M;
                    particle_potential[j] += f.mass[i] * U / M;
                }
            }
        }
        fd.energy = fd.kinetic + fd.potential;
        fd.damping = damping_coefficient(macro, params, a);
        for (int i = 0; i < f.n; ++i) {
            const double wi = vec_norm(sf.w.data(), f.n, d, i);
            fd.max_particle_energy =
                std::max(fd.max_particle_energy, 0.5 * wi * wi + particle_potential[i]);
        }
    }

    for (int a = 0; a < A; ++a) {
        for (int b = a + 1; b < A; ++b) {
            rec.global_diameter = std::max(rec.global_diameter, macro_dist(macro, a, b));
            double dv2 = 0.0;
            for (int k = 0; k < d; ++k) {
                const double c = macro.Vc(a, k) - macro.Vc(b, k);
                dv2 += c * c;
            }
            rec.global_alignment = std::max(rec.global_alignment, std::sqrt(dv2));
        }
        const Flock& f = state.flocks[a];
        for (int i = 0; i < f.n; ++i) {
            double dv2 = 0.0;
            for (int k = 0; k < d; ++k) {
                const double c = f.v(i, k) - macro.momentum_avg[k];
                dv2 += c * c;
            }
            rec.global_max_deviation = std::max(rec.global_max_deviation, std::sqrt(dv2));
        }
    }
    return rec;
}

std::vector<double> energy_law_residual(const std::vector<MultiFlockState>& trajectory,
                                        const ModelParams& params) {
    if (trajectory.size() < 3)
        throw std::invalid_argument("energy_law_residual needs at least 3 samples");
    const double dt = trajectory[1].time - trajectory[0].time;
    for (std::size_t k = 1; k < trajectory.size(); ++k) {
        const double step = trajectory[k].time - trajectory[k - 1].time;
        if (std::abs(step - dt) > 1e-8 * std::max(1.0, std::abs(dt)))
            throw std::invalid_argument("energy_law_residual requires uniform sampling");
    }
    std::vector<DiagnosticsRecord> recs;
    recs.reserve(trajectory.size());
    for (const auto& st : trajectory) recs.push_back(compute_record(st, params));

    std::vector<double> out;
    out.reserve(trajectory.size() - 2);
    const int A = static_cast<int>(recs.front().flocks.size());
    for (std::size_t k = 1; k + 1 < recs.size(); ++k) {
        double worst = 0.0;
        for (int a = 0; a < A; ++a) {
            const double dE =
                (recs[k + 1].flocks[a].energy - recs[k - 1].flocks[a].energy) / (2.0 * dt);
            const double res = dE + recs[k].flocks[a].dissipation +
                               2.0 * params.epsilon * recs[k].flocks[a].damping *
                                   recs[k].flocks[a].kinetic;
            worst = std::max(worst, std::abs(res));
        }
        out.push_back(worst);
    }
    return out;
}

OdiSystem OdiSystem::from(const MultiFlockState& state, const ModelParams& params) {
    OdiSystem sys;
    const MacroObservables macro = macro_observables(state);
    for (int a = 0; a < state.flock_count(); ++a)
        sys.flocks.push_back({state.flocks[a].lambda * macro.flock_mass[a], state.flocks[a].phi});
    sys.global_coupling = params.epsilon * macro.total_mass;
    sys.psi = params.psi;
    return sys;
}

OdiInit OdiInit::from(const DiagnosticsRecord& record) {
    OdiInit init;
    for (const auto& fd : record.flocks) {
        init.A_flock.push_back(fd.alignment);
        init.D_flock.push_back(fd.diameter);
    }
    init.A_global = record.global_alignment;
    init.D_global = record.global_diameter;
    return init;
}

OdiEnvelope odi_envelope(const OdiSystem& sys, const OdiInit& init,
                         const std::vector<double>& sample_times, double dt) {
    const int A = static_cast<int>(sys.flocks.size());
    if (static_cast<int>(init.A_flock.size()) != A || static_cast<int>(init.D_flock.size()) != A)
        throw std::invalid_argument("odi_envelope: init size does not match system");
    for (double v : init.A_flock)
        if (!(v >= 0.0)) throw std::invalid_argument("odi_envelope: negative initial amplitude");

    // State vector: [A_0..A_{A-1}, D_0..D_{A-1}, A, D]
    std::vector<double> y(2 * A + 2);
    for (int a = 0; a < A; ++a) {
        y[a] = init.A_flock[a];
        y[A + a] = init.D_flock[a];
    }
    y[2 * A] = init.A_global;
    y[2 * A + 1] = init.D_global;

    auto rhs = [&](const std::vector<double>& u, std::vector<double>& du) {
        const double psiD = evaluate_kernel(sys.psi, std::max(0.0, u[2 * A + 1]));
        const double gterm = sys.global_coupling * psiD;
        for (int a = 0; a < A; ++a) {
            const double phiD = evaluate_kernel(sys.flocks[a].phi, std::max(0.0, u[A + a]));
            du[a] = -(sys.flocks[a].coupling * phiD + gterm) * u[a];
            du[A + a] = u[a];
        }
        du[2 * A] = -gterm * u[2 * A];
        du[2 * A + 1] = u[2 * A];
    };

    OdiEnvelope env;
    env.t = sample_times;
    env.A_flock.assign(A, {});
    env.D_flock.assign(A, {});
    double t = 0.0;
    std::vector<double> k1(y.size()), k2(y.size()), k3(y.size()), k4(y.size()), tmp(y.size());
    auto emit = [&]() {
        for (int a = 0; a < A; ++a) {
            env.A_flock[a].push_back(y[a]);
            env.D_flock[a].push_back(y[A + a]);
        }
        env.A_global.push_back(y[2 * A]);
        env.D_global.push_back(y[2 * A + 1]);
    };
    for (double target : sample_times) {
        while (t < target - 1e-14 * std::max(1.0, target)) {
            const double h = std::min(dt, target - t);
            rhs(y, k1);
            for (std::size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
            rhs(tmp, k2);
            for (std::size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
            rhs(tmp, k3);
            for (std::size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] + h * k3[i];
            rhs(tmp, k4);
            for (std::size_t i = 0; i < y.size(); ++i)
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            t += h;
        }
        emit();
    }
    return env;
}

FlockBound solve_flock_bound(const KernelSpec& kernel, double coupling, double D0, double A0) {
    if (!(coupling > 0.0)) throw std::invalid_argument("solve_flock_bound: coupling must be > 0");
    if (!(D0 >= 0.0) || !(A0 >= 0.0))
        throw std::invalid_argument("solve_flock_bound: D0, A0 must be >= 0");
    FlockBound out;
    if (A0 == 0.0) return {D0, true};
    const double target = A0 / coupling;
    const double total = tail_integral(kernel, D0, std::numeric_limits<double>::infinity());
    if (!(total > target)) return {0.0, false};

    double lo = D0, hi = std::max(2.0 * D0, D0 + 1.0);
    int guard = 0;
    while (tail_integral(kernel, D0, hi) < target) {
        hi *= 2.0;
        if (++guard > 120)
            throw NumericalError("solve_flock_bound: bracket expansion failed", hi);
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (tail_integral(kernel, D0, mid) < target)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= 1e-13 * std::max(1.0, hi)) break;
    }
    out.D_bar = 0.5 * (lo + hi);
    out.solvable = true;
    return out;
}

double lyapunov_value(const KernelSpec& kernel, double coupling, double A, double D) {
    return A + coupling * (D > 0.0 ? tail_integral(kernel, 0.0, D) : 0.0);
}

namespace {

struct Window {
    std::vector<double> t, y;
};

Window clip_window(const std::vector<double>& t, const std::vector<double>& series, double t0,
                   double t1) {
    if (t.size() != series.size()) throw std::invalid_argument("series/time length mismatch");
    Window w;
    for (std::size_t k = 0; k < t.size(); ++k)
        if (t[k] >= t0 && t[k] <= t1) {
            w.t.push_back(t[k]);
            w.y.push_back(series[k]);
        }
    return w;
}

struct Line {
    double slope = 0.0, intercept = 0.0, r2 = 0.0;
};

Line least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
        syy += y[i] * y[i];
    }
    Line out;
    const double den = n * sxx - sx * sx;
    if (den == 0.0) throw std::invalid_argument("degenerate fit window");
    out.slope = (n * sxy - sx * sy) / den;
    out.intercept = (sy - out.slope * sx) / n;
    const double ss_tot = syy - sy * sy / n;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (out.intercept + out.slope * x[i]);
        ss_res += r * r;
    }
    out.r2 = ss_tot > 0.0 ? std::max(0.0, 1.0 - ss_res / ss_tot) : 1.0;
    return out;
}

} // namespace

RateEstimate fit_decay_rate(const std::vector<double>& t, const std::vector<double>& series,
                            double t0, double t1) {
    if (!(t0 < t1)) throw std::invalid_argument("fit window must satisfy t0 < t1");
    const Window w = clip_window(t, series, t0, t1);
    if (w.t.size() < 10) throw std::invalid_argument("fit window has fewer than 10 samples");
    std::vector<double> logy(w.y.size());
    for (std::size_t k = 0; k < w.y.size(); ++k) {
        if (!(w.y[k] > 0.0)) throw DomainError("fit_decay_rate: nonpositive value in window");
        logy[k] = std::log(w.y[k]);
    }
    const Line fit = least_squares(w.t, logy);
    RateEstimate est;
    est.rate = -fit.slope;
    est.t0 = w.t.front();
    est.t1 = w.t.back();
    est.r2 = fit.r2;
    return est;
}

RateEstimate fit_decay_rate_auto(const std::vector<double>& t, const std::vector<double>& series) {
    if (t.size() != series.size() || t.size() < 10)
        throw std::invalid_argument("fit_decay_rate_auto needs >= 10 samples");
    const double floor = 1e3 * std::numeric_limits<double>::epsilon() * std::abs(series.front());
    std::vector<std::size_t> ok;
    for (std::size_t k = 0; k < series.size(); ++k)
        if (series[k] > floor) ok.push_back(k);
    if (ok.size() < 10) throw std::invalid_argument("series sits at the round-off floor");
    const std::size_t start = ok.size() - static_cast<std::size_t>(std::ceil(0.6 * ok.size()));
    std::vector<double> wt, wy;
    for (std::size_t q = start; q < ok.size(); ++q) {
        wt.push_back(t[ok[q]]);
        wy.push_back(series[ok[q]]);
    }
    if (wt.size() < 10) throw std::invalid_argument("auto fit window has fewer than 10 samples");
    std::vector<double> logy(wy.size());
    for (std::size_t k = 0; k < wy.size(); ++k) {
        if (!(wy[k] > 0.0)) throw DomainError("fit_decay_rate: nonpositive value in window");
        logy[k] = std::log(wy[k]);
    }
    const Line fit = least_squares(wt, logy);
    RateEstimate est;
    est.rate = -fit.slope;
    est.t0 = wt.front();
    est.t1 = wt.back();
    est.r2 = fit.r2;
    return est;
}

AlgebraicDecay algebraic_decay_check(const std::vector<double>& t,
                                     const std::vector<double>& series, double target_p,
                                     double t0, double t1) {
    const Window w = clip_window(t, series, t0, t1);
    if (w.t.size() < 10) throw std::invalid_argument("fit window has fewer than 10 samples");
    std::vector<double> logt(w.t.size()), logy(w.y.size());
    for (std::size_t k = 0; k < w.t.size(); ++k) {
        if (!(w.y[k] > 0.0)) throw DomainError("algebraic_decay_check: nonpositive value");
        logt[k] = 0.5 * std::log1p(w.t[k] * w.t[k]); // log <t>
        logy[k] = std::log(w.y[k]);
    }
    const Line fit = least_squares(logt, logy);
    AlgebraicDecay out;
    out.p_hat = -fit.slope;
    out.r2 = fit.r2;
    out.pass = out.p_hat >= target_p - 0.15;
    return out;
}

double diameter_growth_exponent(double beta) {
    if (!(beta >= 1.0)) throw std::invalid_argument("beta must be >= 1");
    if (beta < 4.0 / 3.0) return 1.0;
    if (beta < 2.0) return 2.0 / (3.0 * beta - 2.0);
    return 0.5;
}

double asymptotic_slow_rate_scale(double eps, double zeta) {
    if (!(eps > 0.0) || !(zeta >= 0.0) || !(zeta <= 1.0))
        throw std::invalid_argument("asymptotic_slow_rate_scale needs eps > 0, zeta in [0,1]");
    if (zeta == 1.0) return eps * std::exp(-1.0 / eps);
    return std::pow(eps, 1.0 / (1.0 - zeta));
}

DiameterGrowth diameter_growth_check(const std::vector<double>& t,
                                     const std::vector<double>& diameter, double beta, double t0,
                                     double t1) {
    const Window w = clip_window(t, diameter, t0, t1);
    if (w.t.size() < 10) throw std::invalid_argument("fit window has fewer than 10 samples");
    std::vector<double> logt(w.t.size()), logy(w.y.size());
    for (std::size_t k = 0; k < w.t.size(); ++k) {
        logt[k] = 0.5 * std::log1p(w.t[k] * w.t[k]);
        logy[k] = std::log(std::max(w.y[k], 1e-300));
    }
    const Line fit = least_squares(logt, logy);
    DiameterGrowth out;
    out.d_hat = fit.slope;
    out.d_bound = diameter_growth_exponent(beta);
    out.pass = out.d_hat <= out.d_bound + 0.1;
    return out;
}

double collision_energy(const MultiFlockState& state, int flock, const std::vector<int>& subset,
                        double C2) {
    const Flock& f = state.flocks[flock];
    double Astar = 0.0, Dstar = 0.0;
    for (std::size_t p = 0; p < subset.size(); ++p) {
        for (std::size_t q = p + 1; q < subset.size(); ++q) {
            const int i = subset[p], j = subset[q];
            Dstar = std::max(Dstar, std::sqrt(pair_dist_sq(f, state.dim, i, j)));
            Astar = std::max(Astar, pair_norm(f.vel, f.n, state.dim, i, j));
        }
    }
    double integral;
    if (Dstar < 1.0)
        integral = tail_integral(f.phi, Dstar, 1.0);
    else if (Dstar == 1.0)
        integral = 0.0;
    else
        integral = -tail_integral(f.phi, 1.0, Dstar);
    return Astar + C2 * integral;
}

std::vector<double> displacement_cauchy_series(const std::vector<MultiFlockState>& trajectory) {
    if (trajectory.empty()) return {};
    const MultiFlockState& last = trajectory.back();
    std::vector<double> out;
    out.reserve(trajectory.size());
    for (const auto& st : trajectory) {
        double worst = 0.0;
        for (int a = 0; a < st.flock_count(); ++a) {
            const Flock& f = st.flocks[a];
            const Flock& g = last.flocks[a];
            for (int i = 0; i < f.n; ++i)
                for (int j = i + 1; j < f.n; ++j) {
                    double r2 = 0.0;
                    for (int k = 0; k < st.dim; ++k) {
                        const double c =
                            (f.x(i, k) - f.x(j, k)) - (g.x(i, k) - g.x(j, k));
                        r2 += c * c;
                    }
                    worst = std::max(worst, std::sqrt(r2));
                }
        }
        out.push_back(worst);
    }
    return out;
}

void write_diagnostics_csv(std::ostream& os, const std::vector<DiagnosticsRecord>& records) {
    if (records.empty()) return;
    const int A = static_cast<int>(records.front().flocks.size());
    os << "t";
    for (int a = 0; a < A; ++a)
        os << ",D_" << a << ",A_" << a << ",K_" << a << ",P_" << a << ",E_" << a << ",I_" << a
           << ",R_" << a << ",Einf_" << a << ",maxdev_" << a << ",Xcorr_" << a;
    os << ",D,A,maxdev\n";
    char buf[32];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << buf;
    };
    for (const auto& r : records) {
        put(r.time);
        for (const auto& fd : r.flocks) {
            for (double v : {fd.diameter, fd.alignment, fd.kinetic, fd.potential, fd.energy,
                             fd.dissipation, fd.damping, fd.max_particle_energy, fd.max_deviation,
                             fd.momentum_corrector}) {
                os << ',';
                put(v);
            }
        }
        os << ',';
        put(r.global_diameter);
        os << ',';
        put(r.global_alignment);
        os << ',';
        put(r.global_max_deviation);
        os << "\n";
    }
}

} // namespace mflock
