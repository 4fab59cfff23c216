#include "multiflock/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mflock {

void IntegratorSpec::validate() const {
    if (method == Method::rk4_fixed && !(dt > 0.0))
        throw std::invalid_argument("rk4_fixed requires dt > 0");
    if (method == Method::rk45_adaptive && (!(rtol > 0.0) || !(atol > 0.0)))
        throw std::invalid_argument("rk45_adaptive requires rtol, atol > 0");
    if (!(t_end > 0.0)) throw std::invalid_argument("t_end must be > 0");
    if (!(min_pair_fraction > 0.0 && min_pair_fraction < 1.0))
        throw std::invalid_argument("min_pair_fraction must lie in (0, 1)");
}

std::vector<PairMin> min_pair_distance(const MultiFlockState& state) {
    std::vector<PairMin> out(state.flocks.size());
    for (int a = 0; a < state.flock_count(); ++a) {
        const Flock& f = state.flocks[a];
        for (int i = 0; i < f.n; ++i) {
            for (int j = i + 1; j < f.n; ++j) {
                const double d = std::sqrt(pair_dist_sq(f, state.dim, i, j));
                if (d < out[a].dist) out[a] = {d, i, j};
            }
        }
    }
    return out;
}

namespace {

// Flat layout: per flock, positions then velocities (both coordinate-major).
std::size_t flat_size(const MultiFlockState& s) {
    std::size_t n = 0;
    for (const auto& f : s.flocks) n += f.pos.size() + f.vel.size();
    return n;
}

void pack(const MultiFlockState& s, std::vector<double>& y) {
    y.resize(flat_size(s));
    std::size_t o = 0;
    for (const auto& f : s.flocks) {
        std::copy(f.pos.begin(), f.pos.end(), y.begin() + o);
        o += f.pos.size();
        std::copy(f.vel.begin(), f.vel.end(), y.begin() + o);
        o += f.vel.size();
    }
}

void unpack(const std::vector<double>& y, double t, MultiFlockState& s) {
    std::size_t o = 0;
    s.time = t;
    for (auto& f : s.flocks) {
        std::copy(y.begin() + o, y.begin() + o + f.pos.size(), f.pos.begin());
        o += f.pos.size();
        std::copy(y.begin() + o, y.begin() + o + f.vel.size(), f.vel.begin());
        o += f.vel.size();
    }
}

void pack_derivative(const Derivative& d, std::vector<double>& k) {
    std::size_t o = 0;
    for (const auto& fd : d.flocks) {
        std::copy(fd.dpos.begin(), fd.dpos.end(), k.begin() + o);
        o += fd.dpos.size();
        std::copy(fd.dvel.begin(), fd.dvel.end(), k.begin() + o);
        o += fd.dvel.size();
    }
}

struct FlatRhs {
    MultiFlockState scratch;
    const ModelParams* params;
    Derivative deriv;
    std::uint64_t evals = 0;

    void operator()(double t, const std::vector<double>& y, std::vector<double>& dy) {
        unpack(y, t, scratch);
        const MacroObservables macro = macro_observables(scratch);
        rhs_master(scratch, macro, *params, deriv);
        dy.resize(y.size());
        pack_derivative(deriv, dy);
        ++evals;
    }
};

bool finite_and_bounded(const std::vector<double>& y) {
    for (double v : y)
        if (!std::isfinite(v) || std::abs(v) > 1e12) return false;
    return true;
}

// Dormand-Prince 5(4) tableau.
constexpr double A21 = 1.0 / 5;
constexpr double A31 = 3.0 / 40, A32 = 9.0 / 40;
constexpr double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9;
constexpr double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561,
                 A54 = -212.0 / 729;
constexpr double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176,
                 A65 = -5103.0 / 18656;
constexpr double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192, B5 = -2187.0 / 6784,
                 B6 = 11.0 / 84;
// b(5th) - b(4th), for the embedded error estimate.
constexpr double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920, E5 = -17253.0 / 339200,
                 E6 = 22.0 / 525, E7 = -1.0 / 40;
constexpr double C2 = 1.0 / 5, C3 = 3.0 / 10, C4 = 4.0 / 5, C5 = 8.0 / 9;

struct Dopri {
    std::vector<double> k1, k2, k3, k4, k5, k6, k7, ytmp, ynew, yerr;

    void resize(std::size_t n) {
        for (auto* v : {&k1, &k2, &k3, &k4, &k5, &k6, &k7, &ytmp, &ynew, &yerr}) v->resize(n);
    }

    // k1 must hold f(t, y) on entry (FSAL). Leaves the candidate in ynew and
    // the error estimate in yerr; k7 = f(t+h, ynew).
    void step(FlatRhs& f, double t, const std::vector<double>& y, double h) {
        const std::size_t n = y.size();
        auto stage = [&](std::vector<double>& out, auto... cks) {
            const double cs[] = {cks.first...};
            const std::vector<double>* ks[] = {cks.second...};
            for (std::size_t i = 0; i < n; ++i) {
                double acc = 0.0;
                for (std::size_t q = 0; q < sizeof...(cks); ++q) acc += cs[q] * (*ks[q])[i];
                out[i] = y[i] + h * acc;
            }
        };
        using P = std::pair<double, const std::vector<double>*>;
        stage(ytmp, P{A21, &k1});
        f(t + C2 * h, ytmp, k2);
        stage(ytmp, P{A31, &k1}, P{A32, &k2});
        f(t + C3 * h, ytmp, k3);
        stage(ytmp, P{A41, &k1}, P{A42, &k2}, P{A43, &k3});
        f(t + C4 * h, ytmp, k4);
        stage(ytmp, P{A51, &k1}, P{A52, &k2}, P{A53, &k3}, P{A54, &k4});
        f(t + C5 * h, ytmp, k5);
        stage(ytmp, P{A61, &k1}, P{A62, &k2}, P{A63, &k3}, P{A64, &k4}, P{A65, &k5});
        f(t + h, ytmp, k6);
        stage(ynew, P{B1, &k1}, P{B3, &k3}, P{B4, &k4}, P{B5, &k5}, P{B6, &k6});
        f(t + h, ynew, k7);
        for (std::size_t i = 0; i < n; ++i)
            yerr[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] +
                           E7 * k7[i]);
    }
};

void rk4_step(FlatRhs& f, double t, std::vector<double>& y, double h, std::vector<double>& k1,
              std::vector<double>& k2, std::vector<double>& k3, std::vector<double>& k4,
              std::vector<double>& ytmp) {
    const std::size_t n = y.size();
    f(t, y, k1);
    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + 0.5 * h * k1[i];
    f(t + 0.5 * h, ytmp, k2);
    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + 0.5 * h * k2[i];
    f(t + 0.5 * h, ytmp, k3);
    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * k3[i];
    f(t + h, ytmp, k4);
    for (std::size_t i = 0; i < n; ++i)
        y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

// Start-of-step intra-flock pair distances of singular-kernel flocks,
// flattened in fixed (flock, i, j) order.
void guard_distances(const MultiFlockState& s, std::vector<double>& out) {
    out.clear();
    for (int a = 0; a < s.flock_count(); ++a) {
        const Flock& f = s.flocks[a];
        if (!f.phi.is_singular()) continue;
        for (int i = 0; i < f.n; ++i)
            for (int j = i + 1; j < f.n; ++j)
                out.push_back(std::sqrt(pair_dist_sq(f, s.dim, i, j)));
    }
}

struct GuardHit {
    bool hit = false;
    int flock = -1, i = -1, j = -1;
    double before = 0.0, after = 0.0;
};

GuardHit guard_check(const MultiFlockState& s, const std::vector<double>& before, double theta) {
    GuardHit g;
    std::size_t idx = 0;
    for (int a = 0; a < s.flock_count(); ++a) {
        const Flock& f = s.flocks[a];
        if (!f.phi.is_singular()) continue;
        for (int i = 0; i < f.n; ++i)
            for (int j = i + 1; j < f.n; ++j) {
                const double d = std::sqrt(pair_dist_sq(f, s.dim, i, j));
                if (d < theta * before[idx]) return {true, a, i, j, before[idx], d};
                ++idx;
            }
    }
    return g;
}

bool any_singular(const MultiFlockState& s) {
    for (const auto& f : s.flocks)
        if (f.phi.is_singular()) return true;
    return false;
}

void check_sample_times(const std::vector<double>& ts, double t_end) {
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (!(ts[i] >= 0.0) || ts[i] > t_end * (1.0 + 1e-12))
            throw std::invalid_argument("sample times must lie within [0, t_end]");
        if (i > 0 && ts[i] < ts[i - 1])
            throw std::invalid_argument("sample times must be sorted");
    }
}

} // namespace

IntegrationResult integrate(const MultiFlockState& state0, const ModelParams& params,
                            const IntegratorSpec& ispec, const std::vector<double>& sample_times) {
    ispec.validate();
    params.validate();
    check_sample_times(sample_times, ispec.t_end);

    const bool guard = ispec.collision_guard || any_singular(state0);
    IntegrationResult res;
    res.samples.reserve(sample_times.size());

    FlatRhs rhs{state0, &params, {}, 0};
    std::vector<double> y;
    pack(state0, y);
    const std::size_t n = y.size();

    MultiFlockState cur = state0; // unpacked view of y
    double t = 0.0;
    std::size_t next_sample = 0;
    auto emit_samples = [&]() {
        while (next_sample < sample_times.size() &&
               sample_times[next_sample] <= t + 1e-12 * std::max(1.0, t)) {
            unpack(y, t, cur);
            cur.time = sample_times[next_sample];
            res.samples.push_back(cur);
            ++next_sample;
        }
    };
    emit_samples(); // t = 0 samples

    std::vector<double> guard_before;
    auto log_event = [&](double tt, EventKind kind, std::string payload) {
        res.log.events.push_back({tt, kind, std::move(payload)});
    };

    const double h_min_floor = 1e-13 * std::max(1.0, ispec.t_end);

    if (ispec.method == Method::rk4_fixed) {
        std::vector<double> k1(n), k2(n), k3(n), k4(n), ytmp(n), ysave;
        while (t < ispec.t_end - 1e-14 * ispec.t_end) {
            double h = std::min(ispec.dt, ispec.t_end - t);
            if (next_sample < sample_times.size() && sample_times[next_sample] > t)
                h = std::min(h, sample_times[next_sample] - t);
            if (guard) {
                unpack(y, t, cur);
                guard_distances(cur, guard_before);
                ysave = y;
            }
            for (;;) {
                rk4_step(rhs, t, y, h, k1, k2, k3, k4, ytmp);
                if (!finite_and_bounded(y)) {
                    log_event(t, EventKind::blowup_suspected, "non-finite or > 1e12 state");
                    throw BlowupError("state blow-up during fixed-step integration", t);
                }
                if (guard) {
                    unpack(y, t + h, cur);
                    const GuardHit g = guard_check(cur, guard_before, ispec.min_pair_fraction);
                    if (g.hit) {
                        y = ysave;
                        log_event(t, EventKind::collision_near_miss,
                                  "pair (" + std::to_string(g.i) + "," + std::to_string(g.j) +
                                      ") of flock " + std::to_string(g.flock));
                        h *= 0.5;
                        ++res.stats.rejected;
                        if (h < h_min_floor)
                            throw CollisionError("collision guard exhausted the minimum step",
                                                 g.flock, g.i, g.j, t);
                        continue;
                    }
                }
                break;
            }
            t += h;
            ++res.stats.steps;
            res.stats.min_accepted_step = std::min(res.stats.min_accepted_step, h);
            res.stats.max_accepted_step = std::max(res.stats.max_accepted_step, h);
            emit_samples();
        }
        res.stats.rhs_evals = rhs.evals;
        emit_samples();
        return res;
    }

    // rk45_adaptive (Dormand-Prince with FSAL)
    Dopri d;
    d.resize(n);
    rhs(0.0, y, d.k1);
    double h = std::min(ispec.t_end, 1e-2 * std::max(1.0, ispec.t_end));
    bool k1_fresh = true;

    while (t < ispec.t_end - 1e-14 * ispec.t_end) {
        h = std::min(h, ispec.t_end - t);
        if (next_sample < sample_times.size() && sample_times[next_sample] > t)
            h = std::min(h, sample_times[next_sample] - t);
        if (h < h_min_floor)
            throw NumericalError("adaptive step underflow at t = " + std::to_string(t), h);
        if (!k1_fresh) {
            rhs(t, y, d.k1);
            k1_fresh = true;
        }
        if (guard) {
            unpack(y, t, cur);
            guard_distances(cur, guard_before);
        }
        d.step(rhs, t, y, h);

        if (!finite_and_bounded(d.ynew)) {
            log_event(t, EventKind::blowup_suspected, "non-finite or > 1e12 state");
            throw BlowupError("state blow-up during adaptive integration", t);
        }

        // Weighted RMS error norm <= 1 accepts the step.
        double err2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double sc =
                ispec.atol + ispec.rtol * std::max(std::abs(y[i]), std::abs(d.ynew[i]));
            const double q = d.yerr[i] / sc;
            err2 += q * q;
        }
        const double errnorm = std::sqrt(err2 / static_cast<double>(n));
        if (errnorm > 1.0) {
            ++res.stats.rejected;
            log_event(t, EventKind::step_rejected,
                      "error norm " + std::to_string(errnorm) + " at h = " + std::to_string(h));
            h *= std::max(0.2, 0.9 * std::pow(errnorm, -0.2));
            continue; // k1 still valid at (t, y)
        }

        if (guard) {
            unpack(d.ynew, t + h, cur);
            const GuardHit g = guard_check(cur, guard_before, ispec.min_pair_fraction);
            if (g.hit) {
                ++res.stats.rejected;
                log_event(t, EventKind::collision_near_miss,
                          "pair (" + std::to_string(g.i) + "," + std::to_string(g.j) +
                              ") of flock " + std::to_string(g.flock) + " contracted to " +
                              std::to_string(g.after / std::max(g.before, 1e-300)));
                h *= 0.5;
                if (h < h_min_floor)
                    throw CollisionError("collision guard exhausted the minimum step", g.flock,
                                         g.i, g.j, t);
                continue;
            }
        }

        t += h;
        y.swap(d.ynew);
        d.k1.swap(d.k7); // FSAL
        ++res.stats.steps;
        res.stats.min_accepted_step = std::min(res.stats.min_accepted_step, h);
        res.stats.max_accepted_step = std::max(res.stats.max_accepted_step, h);
        emit_samples();
        h *= std::min(5.0, std::max(0.2, 0.9 * std::pow(std::max(errnorm, 1e-10), -0.2)));
    }
    res.stats.rhs_evals = rhs.evals;
    emit_samples();
    return res;
}

std::vector<MultiFlockState> reference_integrate(const MultiFlockState& state0,
                                                 const ModelParams& params, double dt_ref,
                                                 double t_end,
                                                 const std::vector<double>& sample_times) {
    if (!(dt_ref > 0.0)) throw std::invalid_argument("dt_ref must be > 0");
    IntegratorSpec ispec;
    ispec.method = Method::rk4_fixed;
    ispec.dt = dt_ref;
    ispec.t_end = t_end;
    return integrate(state0, params, ispec, sample_times).samples;
}

} // namespace mflock
