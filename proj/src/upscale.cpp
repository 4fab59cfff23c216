#include "multiflock/upscale.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace mflock {

double FarfieldComparison::mass_weight_error() const {
    return std::abs(exact_mass_weight - surrogate_mass_weight);
}

double FarfieldComparison::momentum_weight_error() const {
    double r2 = 0.0;
    for (std::size_t k = 0; k < exact_momentum_weight.size(); ++k) {
        const double c = exact_momentum_weight[k] - surrogate_momentum_weight[k];
        r2 += c * c;
    }
    return std::sqrt(r2);
}

FarfieldComparison farfield_weights(const Flock& flock, int dim, const std::vector<double>& probe,
                                    const KernelSpec& kernel) {
    if (static_cast<int>(probe.size()) != dim)
        throw std::invalid_argument("probe point dimension mismatch");
    const double M = flock.total_mass();
    std::vector<double> X(dim, 0.0), V(dim, 0.0);
    for (int k = 0; k < dim; ++k) {
        for (int i = 0; i < flock.n; ++i) {
            X[k] += flock.mass[i] * flock.x(i, k);
            V[k] += flock.mass[i] * flock.v(i, k);
        }
        X[k] /= M;
        V[k] /= M;
    }
    double R2 = 0.0, radius2 = 0.0;
    for (int k = 0; k < dim; ++k) {
        const double c = X[k] - probe[k];
        R2 += c * c;
    }
    for (int i = 0; i < flock.n; ++i) {
        double r2 = 0.0;
        for (int k = 0; k < dim; ++k) {
            const double c = flock.x(i, k) - X[k];
            r2 += c * c;
        }
        radius2 = std::max(radius2, r2);
    }
    if (kernel.is_singular() && R2 <= radius2)
        throw DomainError("singular far-field kernel probed inside the flock");

    FarfieldComparison out;
    out.exact_momentum_weight.assign(dim, 0.0);
    out.surrogate_momentum_weight.assign(dim, 0.0);
    for (int i = 0; i < flock.n; ++i) {
        double r2 = 0.0;
        for (int k = 0; k < dim; ++k) {
            const double c = flock.x(i, k) - probe[k];
            r2 += c * c;
        }
        const double w = flock.mass[i] * evaluate_kernel(kernel, std::sqrt(r2));
        out.exact_mass_weight += w;
        for (int k = 0; k < dim; ++k) out.exact_momentum_weight[k] += w * flock.v(i, k);
    }
    const double wX = evaluate_kernel(kernel, std::sqrt(R2));
    out.surrogate_mass_weight = wX * M;
    for (int k = 0; k < dim; ++k) out.surrogate_momentum_weight[k] = wX * M * V[k];
    return out;
}

SeparationReport separation_report(const MultiFlockState& state, double eta,
                                   const ModelParams* params, double threshold) {
    if (state.flock_count() < 2)
        throw std::invalid_argument("separation_report needs at least 2 flocks");
    const MacroObservables macro = macro_observables(state);
    SeparationReport rep;
    rep.eta = eta;
    rep.threshold = threshold;
    std::vector<double> radius(state.flock_count());
    for (int a = 0; a < state.flock_count(); ++a) {
        radius[a] = flock_radius(state, macro, a);
        rep.intra_time_scale.push_back(1.0 / state.flocks[a].n);
    }
    for (int a = 0; a < state.flock_count(); ++a) {
        for (int b = a + 1; b < state.flock_count(); ++b) {
            SeparationReport::PairEntry e;
            e.a = a;
            e.b = b;
            e.R = macro_dist(macro, a, b);
            e.r_a = radius[a];
            e.r_b = radius[b];
            const double r = std::max(e.r_a, e.r_b);
            e.eps_ratio = e.R > 0.0 ? r / e.R : std::numeric_limits<double>::infinity();
            e.predicted_error_scale = e.R > 0.0 ? r / std::pow(e.R, 1.0 + eta) : 0.0;
            if (params && params->psi.sup_value() > 0.0 && e.R > 0.0) {
                const double psiR = evaluate_kernel(params->psi, e.R);
                if (psiR > 0.0) {
                    const auto& phi = state.flocks[a].phi;
                    if (!phi.is_singular() || e.R > 0.0)
                        e.mu_hat = evaluate_kernel(phi, e.R) / psiR;
                }
            }
            e.reducible = e.eps_ratio <= threshold;
            rep.pairs.push_back(e);
        }
    }
    return rep;
}

std::string separation_report_json(const SeparationReport& report) {
    nlohmann::json j;
    j["eta"] = report.eta;
    j["threshold"] = report.threshold;
    nlohmann::json pairs = nlohmann::json::object();
    for (const auto& e : report.pairs) {
        nlohmann::json p;
        p["R"] = e.R;
        p["r_a"] = e.r_a;
        p["r_b"] = e.r_b;
        p["eps_ratio"] = e.eps_ratio;
        p["predicted_error_scale"] = e.predicted_error_scale;
        p["mu_hat"] = e.mu_hat;
        p["reducible"] = e.reducible;
        pairs[std::to_string(e.a) + "-" + std::to_string(e.b)] = p;
    }
    j["pairs"] = pairs;
    j["intra_time_scale"] = report.intra_time_scale;
    return j.dump(2);
}

std::vector<int> reduction_policy_step(MultiFlockState& state, double eta, double threshold) {
    if (state.flock_count() < 2) return {};
    const SeparationReport rep = separation_report(state, eta, nullptr, threshold);
    std::vector<bool> candidate(state.flocks.size(), true);
    for (const auto& e : rep.pairs) {
        if (!e.reducible) {
            candidate[e.a] = false;
            candidate[e.b] = false;
        }
    }
    std::vector<int> which;
    for (int a = 0; a < state.flock_count(); ++a)
        if (candidate[a] && state.flocks[a].n > 1) which.push_back(a);
    if (!which.empty()) state = reduce_to_superagents(state, which, /*force=*/true, threshold);
    return which;
}

MultiFlockState reduce_to_superagents(const MultiFlockState& state, const std::vector<int>& which,
                                      bool force, double threshold) {
    for (int a : which)
        if (a < 0 || a >= state.flock_count())
            throw std::invalid_argument("reduce_to_superagents: flock id out of range");
    const MacroObservables macro = macro_observables(state);
    if (!force && state.flock_count() >= 2) {
        std::vector<bool> selected(state.flocks.size(), false);
        for (int a : which) selected[a] = true;
        std::vector<double> radius(state.flock_count());
        for (int a = 0; a < state.flock_count(); ++a) radius[a] = flock_radius(state, macro, a);
        for (int a : which) {
            for (int b = 0; b < state.flock_count(); ++b) {
                if (b == a || selected[b]) continue; // retained flocks only
                const double R = macro_dist(macro, a, b);
                const double r = std::max(radius[a], radius[b]);
                if (!(R > 0.0) || r / R > threshold)
                    throw std::invalid_argument(
                        "reduce_to_superagents: flock " + std::to_string(a) +
                        " is not reducible against retained flock " + std::to_string(b));
            }
        }
    }
    MultiFlockState out = state;
    for (int a : which) {
        Flock& f = out.flocks[a];
        if (f.n == 1) continue; // already a super-agent
        Flock reduced;
        reduced.n = 1;
        reduced.pos.resize(state.dim);
        reduced.vel.resize(state.dim);
        for (int k = 0; k < state.dim; ++k) {
            reduced.pos[k] = macro.Xc(a, k);
            reduced.vel[k] = macro.Vc(a, k);
        }
        reduced.mass = {macro.flock_mass[a]};
        reduced.phi = f.phi;
        reduced.lambda = f.lambda;
        reduced.potential = f.potential;
        f = std::move(reduced);
    }
    return out;
}

} // namespace mflock
