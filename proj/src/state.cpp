#include "multiflock/state.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace mflock {

double Flock::total_mass() const {
    double m = 0.0;
    for (double mi : mass) m += mi;
    return m;
}

bool Flock::unit_mass_convention(double rel_tol) const {
    if (n == 0) return false;
    const double ref = 1.0 / n;
    for (double mi : mass)
        if (std::abs(mi - ref) > rel_tol * ref) return false;
    return true;
}

Flock Flock::make(int dim, std::vector<std::vector<double>> positions,
                  std::vector<std::vector<double>> velocities, std::vector<double> masses,
                  KernelSpec phi, double lambda, std::optional<PotentialSpec> potential) {
    Flock f;
    f.n = static_cast<int>(positions.size());
    if (velocities.size() != positions.size() || masses.size() != positions.size())
        throw std::invalid_argument("positions/velocities/masses length mismatch");
    f.pos.assign(static_cast<std::size_t>(dim) * f.n, 0.0);
    f.vel.assign(static_cast<std::size_t>(dim) * f.n, 0.0);
    for (int i = 0; i < f.n; ++i) {
        if (static_cast<int>(positions[i].size()) != dim ||
            static_cast<int>(velocities[i].size()) != dim)
            throw std::invalid_argument("agent vector dimension mismatch");
        for (int k = 0; k < dim; ++k) {
            f.x(i, k) = positions[i][k];
            f.v(i, k) = velocities[i][k];
        }
    }
    f.mass = std::move(masses);
    f.phi = std::move(phi);
    f.lambda = lambda;
    f.potential = std::move(potential);
    return f;
}

int MultiFlockState::total_agents() const {
    int n = 0;
    for (const auto& f : flocks) n += f.n;
    return n;
}

MacroObservables macro_observables(const MultiFlockState& state) {
    const int A = state.flock_count();
    const int d = state.dim;
    MacroObservables m;
    m.dim = d;
    m.flock_mass.assign(A, 0.0);
    m.X.assign(static_cast<std::size_t>(d) * A, 0.0);
    m.V.assign(static_cast<std::size_t>(d) * A, 0.0);
    m.momentum_avg.assign(d, 0.0);
    for (int a = 0; a < A; ++a) {
        const Flock& f = state.flocks[a];
        double M = 0.0;
        for (int i = 0; i < f.n; ++i) M += f.mass[i];
        m.flock_mass[a] = M;
        for (int k = 0; k < d; ++k) {
            double sx = 0.0, sv = 0.0;
            for (int i = 0; i < f.n; ++i) {
                sx += f.mass[i] * f.x(i, k);
                sv += f.mass[i] * f.v(i, k);
            }
            m.X[static_cast<std::size_t>(k) * A + a] = sx / M;
            m.V[static_cast<std::size_t>(k) * A + a] = sv / M;
        }
    }
    for (int a = 0; a < A; ++a) m.total_mass += m.flock_mass[a];
    for (int k = 0; k < d; ++k) {
        double s = 0.0;
        for (int a = 0; a < A; ++a) s += m.flock_mass[a] * m.Vc(a, k);
        m.momentum_avg[k] = s / m.total_mass;
    }
    return m;
}

ShiftedState to_shifted_frame(const MultiFlockState& state) {
    return to_shifted_frame(state, macro_observables(state));
}

ShiftedState to_shifted_frame(const MultiFlockState& state, const MacroObservables& macro) {
    const int d = state.dim;
    ShiftedState s;
    s.dim = d;
    s.flocks.resize(state.flocks.size());
    for (int a = 0; a < state.flock_count(); ++a) {
        const Flock& f = state.flocks[a];
        auto& sf = s.flocks[a];
        sf.n = f.n;
        sf.y.resize(f.pos.size());
        sf.w.resize(f.vel.size());
        for (int k = 0; k < d; ++k) {
            const double Xk = macro.Xc(a, k);
            const double Vk = macro.Vc(a, k);
            const std::size_t off = static_cast<std::size_t>(k) * f.n;
            for (int i = 0; i < f.n; ++i) {
                sf.y[off + i] = f.pos[off + i] - Xk;
                sf.w[off + i] = f.vel[off + i] - Vk;
            }
        }
    }
    return s;
}

std::vector<Violation> validate(const MultiFlockState& state) {
    std::vector<Violation> out;
    if (state.dim < 1)
        out.push_back({-1, -1, "dimension", "state dimension must be >= 1"});
    if (!(state.time >= 0.0))
        out.push_back({-1, -1, "time", "state time must be >= 0"});
    for (int a = 0; a < state.flock_count(); ++a) {
        const Flock& f = state.flocks[a];
        const std::size_t want = static_cast<std::size_t>(state.dim) * f.n;
        if (f.n < 1) out.push_back({a, -1, "cardinality", "flock must have N >= 1 agents"});
        if (f.pos.size() != want || f.vel.size() != want)
            out.push_back({a, -1, "cardinality",
                           "positions/velocities storage does not match N * dim"});
        if (static_cast<int>(f.mass.size()) != f.n)
            out.push_back({a, -1, "cardinality", "masses length does not match N"});
        for (int i = 0; i < static_cast<int>(f.mass.size()); ++i)
            if (!(f.mass[i] > 0.0) || !std::isfinite(f.mass[i]))
                out.push_back({a, i, "positivity", "agent mass must be strictly positive"});
        if (!(f.lambda >= 0.0) || !std::isfinite(f.lambda))
            out.push_back({a, -1, "amplitude", "flock amplitude lambda must be finite and >= 0"});
        try {
            f.phi.validate();
        } catch (const std::exception& e) {
            out.push_back({a, -1, "kernel", e.what()});
        }
        if (f.potential) {
            try {
                f.potential->validate();
            } catch (const std::exception& e) {
                out.push_back({a, -1, "potential", e.what()});
            }
        }
        if (f.pos.size() == want && f.vel.size() == want) {
            for (int i = 0; i < f.n; ++i)
                for (int k = 0; k < state.dim; ++k)
                    if (!std::isfinite(f.x(i, k)) || !std::isfinite(f.v(i, k))) {
                        out.push_back({a, i, "finiteness", "non-finite position or velocity"});
                        k = state.dim;
                    }
        }
    }
    return out;
}

double pair_dist_sq(const Flock& f, int dim, int i, int j) {
    double r2 = 0.0;
    for (int k = 0; k < dim; ++k) {
        const double dxk = f.x(i, k) - f.x(j, k);
        r2 += dxk * dxk;
    }
    return r2;
}

double macro_dist(const MacroObservables& macro, int a, int b) {
    double r2 = 0.0;
    for (int k = 0; k < macro.dim; ++k) {
        const double dk = macro.Xc(a, k) - macro.Xc(b, k);
        r2 += dk * dk;
    }
    return std::sqrt(r2);
}

double flock_radius(const MultiFlockState& state, const MacroObservables& macro, int a) {
    const Flock& f = state.flocks[a];
    double r2max = 0.0;
    for (int i = 0; i < f.n; ++i) {
        double r2 = 0.0;
        for (int k = 0; k < state.dim; ++k) {
            const double dk = f.x(i, k) - macro.Xc(a, k);
            r2 += dk * dk;
        }
        r2max = std::max(r2max, r2);
    }
    return std::sqrt(r2max);
}

void write_snapshot_csv(std::ostream& os, const MultiFlockState& state) {
    const int d = state.dim;
    os << "flock_id,agent_id,mass";
    for (int k = 0; k < d; ++k) os << ",x" << k;
    for (int k = 0; k < d; ++k) os << ",v" << k;
    os << "\n";
    char buf[32];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << ',' << buf;
    };
    for (int a = 0; a < state.flock_count(); ++a) {
        const Flock& f = state.flocks[a];
        for (int i = 0; i < f.n; ++i) {
            os << a << ',' << i;
            put(f.mass[i]);
            for (int k = 0; k < d; ++k) put(f.x(i, k));
            for (int k = 0; k < d; ++k) put(f.v(i, k));
            os << "\n";
        }
    }
}

MultiFlockState read_snapshot_csv(std::istream& is, const MultiFlockState& proto) {
    MultiFlockState out = proto;
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("snapshot CSV is empty");
    if (line.rfind("flock_id,agent_id,mass", 0) != 0)
        throw std::runtime_error("snapshot CSV header mismatch");
    const int d = proto.dim;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string cell;
        auto next = [&]() -> double {
            if (!std::getline(ss, cell, ',')) throw std::runtime_error("short snapshot CSV row");
            return std::stod(cell);
        };
        const int a = static_cast<int>(next());
        const int i = static_cast<int>(next());
        if (a < 0 || a >= out.flock_count() || i < 0 || i >= out.flocks[a].n)
            throw std::runtime_error("snapshot CSV row out of range for prototype state");
        Flock& f = out.flocks[a];
        f.mass[i] = next();
        for (int k = 0; k < d; ++k) f.x(i, k) = next();
        for (int k = 0; k < d; ++k) f.v(i, k) = next();
    }
    return out;
}

} // namespace mflock
