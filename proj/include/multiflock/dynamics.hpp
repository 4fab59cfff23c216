#pragma once

#include <cstdint>
#include <vector>

#include "multiflock/state.hpp"

namespace mflock {

// ---------------------------------------------------------------------------
// Right-hand sides.
//
// Master equation, per agent i of flock alpha:
//
//   dx_i/dt = v_i
//   dv_i/dt = lambda_a * sum_j m_j phi_a(|x_i - x_j|) (v_j - v_i)
//           + eps * sum_{b != a} M_b psi(|X_a - X_b|) (V_b - v_i)
//           [+ F_i in attraction mode]
//
// The self term j = i is skipped in every sum (it vanishes for bounded
// kernels and is undefined for singular ones). Macro observables are
// recomputed from the microscopic state at every evaluation, so the
// epsilon-coupling never drifts from the state it describes.
//
// Super-agent system, per flock:
//
//   dX_a/dt = V_a
//   dV_a/dt = eps * sum_{b != a} M_b psi(|X_a - X_b|) (V_b - V_a)
//
// Shifted frame (y = x - X_a, w = v - V_a):
//
//   dw_i/dt = lambda_a * sum_j m_j phi_a(|x_i - x_j|) (w_j - w_i)
//           - eps * R_a w_i,        R_a = sum_{b != a} M_b psi(|X_a - X_b|)
// ---------------------------------------------------------------------------

enum class Mode { alignment_only, alignment_attraction, superagent_only };

struct ModelParams {
    double epsilon = 0.0; // inter-flock amplitude, >= 0 (0: decoupled flocks)
    KernelSpec psi;       // inter-flock kernel, must be bounded
    Mode mode = Mode::alignment_only;
    bool allow_heterogeneous_attraction = false;

    void validate() const;
};

struct Derivative {
    struct FlockDeriv {
        std::vector<double> dpos; // coordinate-major, size d*n
        std::vector<double> dvel;
    };
    std::vector<FlockDeriv> flocks;
    std::vector<double> dX; // size d*A, coordinate-major
    std::vector<double> dV;
};

// Kernel evaluation counters; every evaluation is one symmetric pair.
struct RhsStats {
    std::uint64_t intra_pair_evals = 0;
    std::uint64_t inter_pair_evals = 0;
};

Derivative rhs_master(const MultiFlockState& state, const MacroObservables& macro,
                      const ModelParams& params, RhsStats* stats = nullptr);
void rhs_master(const MultiFlockState& state, const MacroObservables& macro,
                const ModelParams& params, Derivative& out, RhsStats* stats = nullptr);

// Flock-level part only (dX, dV).
Derivative rhs_superagent(const MacroObservables& macro, const ModelParams& params);

// Pairwise attraction forces of one flock, coordinate-major (d*n).
// F_i = -(1/M) sum_j m_j U'(|x_i - x_j|) (x_i - x_j)/|x_i - x_j|, which under
// the unit-mass convention is the 1/N-normalized convex-potential force.
std::vector<double> attraction_force(const Flock& flock, int dim,
                                     bool allow_heterogeneous = false);

// d(w)/dt per flock of the shifted system (dy/dt is w itself). Kernels,
// amplitudes and masses come from `state`; distances are shift-invariant.
std::vector<std::vector<double>> rhs_shifted(const MultiFlockState& state,
                                             const ShiftedState& shifted,
                                             const MacroObservables& macro,
                                             const ModelParams& params);

// R_a = sum_{b != a} M_b psi(|X_a - X_b|); empty sum (A = 1) gives 0.
double damping_coefficient(const MacroObservables& macro, const ModelParams& params, int a);

} // namespace mflock
