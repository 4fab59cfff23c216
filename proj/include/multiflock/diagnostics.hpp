#pragma once

#include <iosfwd>

#include "multiflock/dynamics.hpp"

namespace mflock {

// ---------------------------------------------------------------------------
// Theorem-facing functionals.
//
// Shifted-frame quantities per flock (w = v - V_a, y = x - X_a):
//
//   D_a = max_ij |x_i - x_j|           A_a = max_ij |v_i - v_j|
//   K_a = (1/2M_a) sum_i m_i |w_i|^2
//   P_a = (1/2M_a^2) sum_ij m_i m_j U(|y_ij|)
//   I_a = (lambda_a/2M_a) sum_ij m_i m_j phi_ij |w_ij|^2
//   R_a = sum_{b != a} M_b psi(|X_a - X_b|)
//
// Under the unit-mass convention (m_i = 1/N, lambda = 1) these reduce to the
// 1/N-normalized forms of the attraction model. With these definitions the
// energy law is exact:
//
//   dE_a/dt = -I_a - 2 eps R_a K_a,      E_a = K_a + P_a,
//
// I_a being the instantaneous alignment dissipation of K_a and each w_i
// contracting at rate eps*R_a (so |w|^2 at twice that).
// ---------------------------------------------------------------------------

struct FlockDiagnostics {
    double diameter = 0.0;            // D_a
    double alignment = 0.0;           // A_a
    double kinetic = 0.0;             // K_a
    double potential = 0.0;           // P_a
    double energy = 0.0;              // E_a = K_a + P_a
    double dissipation = 0.0;         // I_a
    double damping = 0.0;             // R_a
    double max_particle_energy = 0.0; // E_a,inf = max_i (|w_i|^2/2 + (1/M) sum m_k U(|y_ik|))
    double max_deviation = 0.0;       // max_i |v_i - V_a|
    double momentum_corrector = 0.0;  // (1/M_a) sum_i m_i y_i . w_i
};

struct DiagnosticsRecord {
    double time = 0.0;
    std::vector<FlockDiagnostics> flocks;
    double global_diameter = 0.0;      // D = max_ab |X_a - X_b|
    double global_alignment = 0.0;     // A = max_ab |V_a - V_b|
    double global_max_deviation = 0.0; // max_{a,i} |v_i - V|
    bool unit_mass = true;             // mass convention in force
};

DiagnosticsRecord compute_record(const MultiFlockState& state, const ModelParams& params);

// Residual of the exact energy law on a uniformly sampled trajectory:
// max_a |dE_a/dt + I_a + 2 eps R_a K_a| per interior sample (centered
// differences for dE/dt). Throws std::invalid_argument for < 3 samples or
// non-uniform spacing.
std::vector<double> energy_law_residual(const std::vector<MultiFlockState>& trajectory,
                                        const ModelParams& params);

// ---------------------------------------------------------------------------
// Scalar ODI envelope (equality version):
//
//   dA_a/dt = -(c_a phi_a(D_a) + G psi(D)) A_a      dD_a/dt = A_a
//   dA/dt   = -G psi(D) A                           dD/dt   = A
//
// with c_a = lambda_a M_a the inner couplings and G = eps M the global one.
// By the comparison principle the simulated maxima stay below these curves.
// ---------------------------------------------------------------------------

struct OdiSystem {
    struct FlockTerm {
        double coupling = 0.0; // lambda_a * M_a
        KernelSpec phi;
    };
    std::vector<FlockTerm> flocks;
    double global_coupling = 0.0; // eps * M
    KernelSpec psi;

    static OdiSystem from(const MultiFlockState& state, const ModelParams& params);
};

struct OdiInit {
    std::vector<double> A_flock;
    std::vector<double> D_flock;
    double A_global = 0.0;
    double D_global = 0.0;

    static OdiInit from(const DiagnosticsRecord& record);
};

struct OdiEnvelope {
    std::vector<double> t;
    std::vector<std::vector<double>> A_flock; // [flock][sample]
    std::vector<std::vector<double>> D_flock;
    std::vector<double> A_global;
    std::vector<double> D_global;
};

OdiEnvelope odi_envelope(const OdiSystem& sys, const OdiInit& init,
                         const std::vector<double>& sample_times, double dt = 1e-3);

// ---------------------------------------------------------------------------
// Flock bound: the unique root of  coupling * int_{D0}^{Dbar} phi = A0,
// solvable whenever the tail mass beyond D0 exceeds A0/coupling (always for
// fat tails). coupling is lambda_a M_a for inner bounds and eps M globally.
// ---------------------------------------------------------------------------

struct FlockBound {
    double D_bar = 0.0;
    bool solvable = false;
};

FlockBound solve_flock_bound(const KernelSpec& kernel, double coupling, double D0, double A0);

// Lyapunov function of the prototype ODI pair: L = A + coupling * int_0^D phi.
double lyapunov_value(const KernelSpec& kernel, double coupling, double A, double D);

// ---------------------------------------------------------------------------
// Rate fitting.
// ---------------------------------------------------------------------------

struct RateEstimate {
    double rate = 0.0; // fitted decay exponent (sign-flipped log slope)
    double t0 = 0.0;   // fit window
    double t1 = 0.0;
    double r2 = 0.0;
    double theoretical_floor = 0.0; // caller-supplied reference, not fitted
};

// Least-squares slope of log(series) against t on [t0, t1]. Throws
// DomainError on nonpositive values inside the window and
// std::invalid_argument for fewer than 10 window samples.
RateEstimate fit_decay_rate(const std::vector<double>& t, const std::vector<double>& series,
                            double t0, double t1);

// Default window: the last 60% of the samples where the series still exceeds
// 1e3 * machine-eps * its initial value (avoids fitting round-off floors).
RateEstimate fit_decay_rate_auto(const std::vector<double>& t, const std::vector<double>& series);

struct AlgebraicDecay {
    double p_hat = 0.0;
    bool pass = false;
    double r2 = 0.0;
};

// Log-log fit of series against <t> = sqrt(1 + t^2) on [t0, t1];
// pass iff p_hat >= target_p - 0.15.
AlgebraicDecay algebraic_decay_check(const std::vector<double>& t,
                                     const std::vector<double>& series, double target_p,
                                     double t0, double t1);

// A-priori diameter growth exponent d(beta) of the attraction model:
// 1 on [1, 4/3), 2/(3 beta - 2) on [4/3, 2), 1/2 on [2, inf).
double diameter_growth_exponent(double beta);

// Reference scale of the slow alignment rate for small eps and a
// <r>^-zeta coupling kernel: eps^(1/(1-zeta)) for zeta < 1 and
// eps*exp(-1/eps) at zeta = 1. Qualitative (monotone in eps); no constants
// are attached.
double asymptotic_slow_rate_scale(double eps, double zeta);

struct DiameterGrowth {
    double d_hat = 0.0;
    double d_bound = 0.0;
    bool pass = false; // d_hat <= d_bound + 0.1
};

DiameterGrowth diameter_growth_check(const std::vector<double>& t,
                                     const std::vector<double>& diameter, double beta,
                                     double t0, double t1);

// ---------------------------------------------------------------------------
// Collision functional (singular kernels): for an agent subset of flock a,
//   E = A* + C2 * int_{D*}^{1} phi_a(r) dr
// with A*, D* the subset velocity/position diameters; grows at most linearly
// while the subset stays collision-free.
// ---------------------------------------------------------------------------

double collision_energy(const MultiFlockState& state, int flock, const std::vector<int>& subset,
                        double C2);

// max over flocks, pairs and samples-to-end of |(x_i - x_j)(t) - (x_i - x_j)(t_end)|
// (strong flocking: displacements stabilize). One value per sample.
std::vector<double> displacement_cauchy_series(const std::vector<MultiFlockState>& trajectory);

// Wide diagnostics CSV: one row per record, one column per functional.
void write_diagnostics_csv(std::ostream& os, const std::vector<DiagnosticsRecord>& records);

} // namespace mflock
