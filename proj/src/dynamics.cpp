#include "multiflock/dynamics.hpp"

#include <cmath>
#include <stdexcept>

namespace mflock {

void ModelParams::validate() const {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
        throw std::invalid_argument("epsilon must be finite and >= 0");
    psi.validate();
    if (!psi.is_bounded())
        throw std::invalid_argument("inter-flock kernel psi must be bounded (no singular family)");
}

double damping_coefficient(const MacroObservables& macro, const ModelParams& params, int a) {
    const int A = static_cast<int>(macro.flock_mass.size());
    double R = 0.0;
    for (int b = 0; b < A; ++b) {
        if (b == a) continue;
        R += macro.flock_mass[b] * evaluate_kernel(params.psi, macro_dist(macro, a, b));
    }
    return R;
}

namespace {

void ensure_shape(const MultiFlockState& state, Derivative& out) {
    const int A = state.flock_count();
    const std::size_t dA = static_cast<std::size_t>(state.dim) * A;
    out.flocks.resize(A);
    for (int a = 0; a < A; ++a) {
        const std::size_t sz = state.flocks[a].pos.size();
        out.flocks[a].dpos.assign(sz, 0.0);
        out.flocks[a].dvel.assign(sz, 0.0);
    }
    out.dX.assign(dA, 0.0);
    out.dV.assign(dA, 0.0);
}

void add_intra_alignment(const Flock& f, int dim, double t, int flock_id,
                         std::vector<double>& dvel, RhsStats* stats) {
    const int n = f.n;
    if (f.lambda == 0.0 || n < 2) return;
    const bool singular = f.phi.is_singular();
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double r2 = pair_dist_sq(f, dim, i, j);
            if (singular && r2 == 0.0)
                throw CollisionError("coincident agents under a singular kernel", flock_id, i, j, t);
            const double w = evaluate_kernel_r2(f.phi, r2);
            if (stats) ++stats->intra_pair_evals;
            if (w == 0.0) continue;
            const double ci = f.lambda * f.mass[j] * w;
            const double cj = f.lambda * f.mass[i] * w;
            for (int k = 0; k < dim; ++k) {
                const std::size_t off = static_cast<std::size_t>(k) * n;
                const double diff = f.vel[off + j] - f.vel[off + i];
                dvel[off + i] += ci * diff;
                dvel[off + j] -= cj * diff;
            }
        }
    }
}

} // namespace

std::vector<double> attraction_force(const Flock& flock, int dim, bool allow_heterogeneous) {
    if (!flock.potential)
        throw std::invalid_argument("attraction_force requires a flock potential");
    if (!allow_heterogeneous && !flock.unit_mass_convention())
        throw std::invalid_argument(
            "attraction requires the unit-mass convention (set allow_heterogeneous_attraction)");
    const PotentialSpec& U = *flock.potential;
    const int n = flock.n;
    const double M = flock.total_mass();
    std::vector<double> force(static_cast<std::size_t>(dim) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double r = std::sqrt(pair_dist_sq(flock, dim, i, j));
            const double g = potential_slope_over_r(U, r); // U'(r)/r, finite at r = 0
            if (g == 0.0) continue;
            const double ci = flock.mass[j] / M * g;
            const double cj = flock.mass[i] / M * g;
            for (int k = 0; k < dim; ++k) {
                const std::size_t off = static_cast<std::size_t>(k) * n;
                const double diff = flock.pos[off + i] - flock.pos[off + j];
                force[off + i] -= ci * diff;
                force[off + j] += cj * diff;
            }
        }
    }
    return force;
}

void rhs_master(const MultiFlockState& state, const MacroObservables& macro,
                const ModelParams& params, Derivative& out, RhsStats* stats) {
    const int A = state.flock_count();
    const int d = state.dim;
    ensure_shape(state, out);

    // Flock-level part is shared with rhs_superagent.
    for (int a = 0; a < A; ++a)
        for (int k = 0; k < d; ++k) out.dX[static_cast<std::size_t>(k) * A + a] = macro.Vc(a, k);
    if (params.epsilon > 0.0 && A > 1) {
        for (int a = 0; a < A; ++a) {
            for (int b = a + 1; b < A; ++b) {
                const double w = evaluate_kernel(params.psi, macro_dist(macro, a, b));
                if (stats) ++stats->inter_pair_evals;
                for (int k = 0; k < d; ++k) {
                    const double diff = macro.Vc(b, k) - macro.Vc(a, k);
                    out.dV[static_cast<std::size_t>(k) * A + a] +=
                        params.epsilon * macro.flock_mass[b] * w * diff;
                    out.dV[static_cast<std::size_t>(k) * A + b] -=
                        params.epsilon * macro.flock_mass[a] * w * diff;
                }
            }
        }
    }

    for (int a = 0; a < A; ++a) {
        const Flock& f = state.flocks[a];
        auto& df = out.flocks[a];
        df.dpos = f.vel; // dx/dt = v

        if (params.mode == Mode::superagent_only) {
            // Every agent carries the flock-level acceleration.
            for (int k = 0; k < d; ++k) {
                const double dVk = out.dV[static_cast<std::size_t>(k) * A + a];
                const std::size_t off = static_cast<std::size_t>(k) * f.n;
                for (int i = 0; i < f.n; ++i) df.dvel[off + i] = dVk;
            }
            continue;
        }

        add_intra_alignment(f, d, state.time, a, df.dvel, stats);

        if (params.epsilon > 0.0 && A > 1) {
            for (int b = 0; b < A; ++b) {
                if (b == a) continue;
                const double coef = params.epsilon * macro.flock_mass[b] *
                                    evaluate_kernel(params.psi, macro_dist(macro, a, b));
                if (coef == 0.0) continue;
                for (int k = 0; k < d; ++k) {
                    const double Vbk = macro.Vc(b, k);
                    const std::size_t off = static_cast<std::size_t>(k) * f.n;
                    for (int i = 0; i < f.n; ++i)
                        df.dvel[off + i] += coef * (Vbk - f.vel[off + i]);
                }
            }
        }

        if (params.mode == Mode::alignment_attraction && f.potential) {
            const auto force = attraction_force(f, d, params.allow_heterogeneous_attraction);
            for (std::size_t idx = 0; idx < force.size(); ++idx) df.dvel[idx] += force[idx];
        }
    }
}

Derivative rhs_master(const MultiFlockState& state, const MacroObservables& macro,
                      const ModelParams& params, RhsStats* stats) {
    Derivative out;
    rhs_master(state, macro, params, out, stats);
    return out;
}

Derivative rhs_superagent(const MacroObservables& macro, const ModelParams& params) {
    const int A = static_cast<int>(macro.flock_mass.size());
    const int d = macro.dim;
    Derivative out;
    out.dX.assign(static_cast<std::size_t>(d) * A, 0.0);
    out.dV.assign(static_cast<std::size_t>(d) * A, 0.0);
    for (int a = 0; a < A; ++a)
        for (int k = 0; k < d; ++k) out.dX[static_cast<std::size_t>(k) * A + a] = macro.Vc(a, k);
    if (params.epsilon == 0.0 || A < 2) return out;
    for (int a = 0; a < A; ++a) {
        for (int b = a + 1; b < A; ++b) {
            const double w = evaluate_kernel(params.psi, macro_dist(macro, a, b));
            for (int k = 0; k < d; ++k) {
                const double diff = macro.Vc(b, k) - macro.Vc(a, k);
                out.dV[static_cast<std::size_t>(k) * A + a] +=
                    params.epsilon * macro.flock_mass[b] * w * diff;
                out.dV[static_cast<std::size_t>(k) * A + b] -=
                    params.epsilon * macro.flock_mass[a] * w * diff;
            }
        }
    }
    return out;
}

std::vector<std::vector<double>> rhs_shifted(const MultiFlockState& state,
                                             const ShiftedState& shifted,
                                             const MacroObservables& macro,
                                             const ModelParams& params) {
    const int A = state.flock_count();
    const int d = state.dim;
    std::vector<std::vector<double>> dw(A);
    for (int a = 0; a < A; ++a) {
        const Flock& f = state.flocks[a];
        const auto& sf = shifted.flocks[a];
        dw[a].assign(sf.w.size(), 0.0);
        if (f.lambda > 0.0 && f.n > 1) {
            for (int i = 0; i < f.n; ++i) {
                for (int j = i + 1; j < f.n; ++j) {
                    const double r2 = pair_dist_sq(f, d, i, j);
                    if (f.phi.is_singular() && r2 == 0.0)
                        throw CollisionError("coincident agents under a singular kernel", a, i, j,
                                             state.time);
                    const double w = evaluate_kernel_r2(f.phi, r2);
                    if (w == 0.0) continue;
                    const double ci = f.lambda * f.mass[j] * w;
                    const double cj = f.lambda * f.mass[i] * w;
                    for (int k = 0; k < d; ++k) {
                        const std::size_t off = static_cast<std::size_t>(k) * f.n;
                        const double diff = sf.w[off + j] - sf.w[off + i];
                        dw[a][off + i] += ci * diff;
                        dw[a][off + j] -= cj * diff;
                    }
                }
            }
        }
        const double damping = params.epsilon * damping_coefficient(macro, params, a);
        if (damping != 0.0)
            for (std::size_t idx = 0; idx < dw[a].size(); ++idx) dw[a][idx] -= damping * sf.w[idx];
    }
    return dw;
}

} // namespace mflock
