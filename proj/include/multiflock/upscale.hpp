#pragma once

#include <string>
#include <vector>

#include "multiflock/dynamics.hpp"

namespace mflock {

// ---------------------------------------------------------------------------
// Far-field (monopole) reduction analysis.
//
// A flock probed from a remote point y may be replaced by its super-agent:
// the exact weights
//
//   sum_i m_i phi(|x_i - y|)        and      sum_i m_i phi(|x_i - y|) v_i
//
// against the monopole surrogates phi(|X - y|) M and phi(|X - y|) M V carry
// an absolute error O(r / R^(1+eta)) (first Legendre order about the center
// of mass), i.e. O(r/R) relative, with r the flock radius and R = |X - y|.
// ---------------------------------------------------------------------------

struct FarfieldComparison {
    double exact_mass_weight = 0.0;
    std::vector<double> exact_momentum_weight;
    double surrogate_mass_weight = 0.0;
    std::vector<double> surrogate_momentum_weight;

    double mass_weight_error() const;     // |exact - surrogate|
    double momentum_weight_error() const; // Euclidean
};

FarfieldComparison farfield_weights(const Flock& flock, int dim, const std::vector<double>& probe,
                                    const KernelSpec& kernel);

struct SeparationReport {
    struct PairEntry {
        int a = 0, b = 0;
        double R = 0.0;   // |X_a - X_b|
        double r_a = 0.0; // flock radii
        double r_b = 0.0;
        double eps_ratio = 0.0;             // max(r_a, r_b) / R
        double predicted_error_scale = 0.0; // max(r_a, r_b) / R^(1+eta)
        double mu_hat = 0.0;                // phi_a(R) / psi(R), 0 when psi vanishes
        bool reducible = false;             // eps_ratio <= threshold
    };
    std::vector<PairEntry> pairs;
    // Temporal scale on which each flock's own dynamics peaks, O(1/N_a);
    // logged for inspection, the reduction policy uses the spatial ratio.
    std::vector<double> intra_time_scale;
    double eta = 0.0;
    double threshold = 0.1;
};

// eta is the far-field decay exponent of the microscopic kernel (the
// cucker_smale `exponent` for built-in setups). Throws for A < 2.
SeparationReport separation_report(const MultiFlockState& state, double eta,
                                   const ModelParams* params = nullptr, double threshold = 0.1);

std::string separation_report_json(const SeparationReport& report);

// Replaces each selected flock by a single agent of mass M_a at (X_a, V_a).
// Preconditions: every selected flock must be reducible (eps_ratio within
// threshold) against every retained flock, unless force is set. The result
// is an ordinary MultiFlockState; integrating it under rhs_master realizes
// the hybrid description (some flocks microscopic, some super-agents).
MultiFlockState reduce_to_superagents(const MultiFlockState& state, const std::vector<int>& which,
                                      bool force = false, double threshold = 0.1);

// One evaluation of the reduction policy: every flock whose pair ratios
// against all other flocks sit within the threshold is replaced by its
// super-agent. Reduction is irreversible (agents are never reconstructed),
// so the policy only ever shrinks flocks. Returns the reduced flock ids.
std::vector<int> reduction_policy_step(MultiFlockState& state, double eta,
                                       double threshold = 0.1);

} // namespace mflock
