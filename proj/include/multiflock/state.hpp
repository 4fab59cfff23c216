#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "multiflock/kernels.hpp"

namespace mflock {

// ---------------------------------------------------------------------------
// Multi-flock phase state.
//
// Per-coordinate storage is contiguous (structure-of-arrays): component k of
// agent i lives at index k*N + i, so pairwise inner loops stream through
// memory. Masses are per agent; the unit-mass convention of the attraction
// model (m_i = 1/N, lambda = 1) is just a particular mass assignment.
// ---------------------------------------------------------------------------

struct Flock {
    int n = 0;                        // N_alpha
    std::vector<double> pos;          // size d*n, coordinate-major
    std::vector<double> vel;          // size d*n, coordinate-major
    std::vector<double> mass;         // size n, strictly positive
    KernelSpec phi;                   // intra-flock kernel phi_alpha
    double lambda = 1.0;              // intra-flock amplitude lambda_alpha
    std::optional<PotentialSpec> potential;

    double x(int i, int k) const { return pos[static_cast<std::size_t>(k) * n + i]; }
    double v(int i, int k) const { return vel[static_cast<std::size_t>(k) * n + i]; }
    double& x(int i, int k) { return pos[static_cast<std::size_t>(k) * n + i]; }
    double& v(int i, int k) { return vel[static_cast<std::size_t>(k) * n + i]; }

    double total_mass() const;

    // True when all masses equal 1/n to round-off (the unit-mass convention).
    bool unit_mass_convention(double rel_tol = 1e-12) const;

    static Flock make(int dim, std::vector<std::vector<double>> positions,
                      std::vector<std::vector<double>> velocities, std::vector<double> masses,
                      KernelSpec phi, double lambda = 1.0,
                      std::optional<PotentialSpec> potential = std::nullopt);
};

struct MultiFlockState {
    int dim = 1;
    double time = 0.0;
    std::vector<Flock> flocks;

    int flock_count() const { return static_cast<int>(flocks.size()); }
    int total_agents() const;
};

struct MacroObservables {
    // Per flock: mass, center of mass, momentum average (coordinate-major,
    // X[k*A + a] is component k of flock a, matching the agent layout).
    std::vector<double> flock_mass;  // size A
    std::vector<double> X;           // size d*A
    std::vector<double> V;           // size d*A
    double total_mass = 0.0;         // M
    std::vector<double> momentum_avg; // global V, size d

    int dim = 1;
    double Xc(int a, int k) const { return X[static_cast<std::size_t>(k) * flock_mass.size() + a]; }
    double Vc(int a, int k) const { return V[static_cast<std::size_t>(k) * flock_mass.size() + a]; }
};

struct ShiftedState {
    // Same layout as the flocks they shadow: y = x - X_alpha, w = v - V_alpha.
    struct ShiftedFlock {
        int n = 0;
        std::vector<double> y;
        std::vector<double> w;
        double y_at(int i, int k) const { return y[static_cast<std::size_t>(k) * n + i]; }
        double w_at(int i, int k) const { return w[static_cast<std::size_t>(k) * n + i]; }
    };
    int dim = 1;
    std::vector<ShiftedFlock> flocks;
};

struct Violation {
    int flock = -1; // -1: state-level
    int agent = -1; // -1: flock-level
    std::string invariant;
    std::string message;
};

MacroObservables macro_observables(const MultiFlockState& state);
ShiftedState to_shifted_frame(const MultiFlockState& state);
ShiftedState to_shifted_frame(const MultiFlockState& state, const MacroObservables& macro);
std::vector<Violation> validate(const MultiFlockState& state);

// Squared distance between agents i, j of one flock.
double pair_dist_sq(const Flock& f, int dim, int i, int j);
// Distance between the centers of flocks a and b.
double macro_dist(const MacroObservables& macro, int a, int b);
// Max distance of any agent to the flock center of mass.
double flock_radius(const MultiFlockState& state, const MacroObservables& macro, int a);

// Snapshot CSV, one record per agent:
//   flock_id,agent_id,mass,x0..x{d-1},v0..v{d-1}
// Header row is mandatory and the column order is fixed.
void write_snapshot_csv(std::ostream& os, const MultiFlockState& state);
// Fills positions/velocities/masses of `proto` (kernels and amplitudes are
// not part of the snapshot schema and must come from the caller).
MultiFlockState read_snapshot_csv(std::istream& is, const MultiFlockState& proto);

} // namespace mflock
