#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "multiflock/errors.hpp"

namespace mflock {

// ---------------------------------------------------------------------------
// Communication kernels
//
// All built-in families are radial, nonnegative and non-increasing:
//
//   constant        phi(r) = c0                     (c0 = 0 allowed: silent flock)
//   cucker_smale    phi(r) = c0 * <r>^-exponent,    <r> = sqrt(1 + r^2)
//   power_singular  phi(r) = c0 * r^-(1+s),         0 <= s < 2, undefined at r = 0
//   tabulated       monotone piecewise-linear table of (r, phi) knots
//
// Tail/head classification is by divergence of the integral of phi over
// [r0, inf) and (0, 1] respectively.
// ---------------------------------------------------------------------------

enum class KernelFamily { constant, cucker_smale, power_singular, tabulated };
enum class TailClass { fat_tail, thin_tail };
enum class HeadClass { fat_head, integrable_head };

struct KernelSpec {
    KernelFamily family = KernelFamily::constant;
    double c0 = 1.0;       // amplitude, >= 0 (zero only meaningful for constant)
    double exponent = 0.0; // cucker_smale decay exponent (eta / zeta / gamma)
    double s = 0.0;        // power_singular order, phi = c0 r^-(1+s)

    // Tabulated family only: knots with strictly increasing r >= 0 and
    // non-increasing phi >= 0. Beyond the support radius (cutoff if given,
    // else the last knot) the kernel is zero; below the first knot it is
    // flat at the first value.
    std::vector<std::pair<double, double>> table;
    std::optional<double> cutoff;

    static KernelSpec constant_kernel(double c0);
    static KernelSpec cucker_smale_kernel(double c0, double exponent);
    static KernelSpec power_singular_kernel(double c0, double s);
    static KernelSpec tabulated_kernel(std::vector<std::pair<double, double>> knots,
                                       std::optional<double> cutoff = std::nullopt);

    // Throws std::invalid_argument on a malformed spec.
    void validate() const;

    bool is_singular() const { return family == KernelFamily::power_singular; }
    bool is_analytic() const { return family != KernelFamily::tabulated; }
    // Bounded on [0, inf); required of inter-flock kernels.
    bool is_bounded() const { return !is_singular(); }
    // Twice differentiable with bounded derivatives (hydro solver requirement).
    bool is_w2inf() const {
        return family == KernelFamily::constant || family == KernelFamily::cucker_smale;
    }
    // sup phi; infinity for singular families.
    double sup_value() const;
};

double evaluate_kernel(const KernelSpec& spec, double r);
// Same kernel from the squared distance (skips the sqrt for smooth families;
// the hot path of the pairwise loops).
double evaluate_kernel_r2(const KernelSpec& spec, double r2);

TailClass classify_tail(const KernelSpec& spec);
HeadClass classify_head(const KernelSpec& spec);

// Integral of phi over [a, b], b may be +infinity. Returns +infinity when the
// integral diverges. Analytic for built-in families where an antiderivative
// exists; adaptive quadrature otherwise (abs tol 1e-10, rel tol 1e-8).
double tail_integral(const KernelSpec& spec, double a, double b);

// ---------------------------------------------------------------------------
// Attraction potentials: the 2-zone shifted power family
//
//   U(r) = a0 * ((r - L)_+)^beta
//
// vanishing inside the inner radius L, convex, with far-field growth
// U(r) >= a0 * growth_rescale * r^beta for r > Lprime where
// growth_rescale = (1 - L/Lprime)^beta, and tamed derivatives
// |U'| <= a1 r^(beta-1), |U''| <= a2 r^(beta-2) with a1 = a0*beta,
// a2 = a0*beta*(beta-1). C^2 regularity restricts (L, beta): either
// beta > 2, or L = 0 with beta >= 2 (quadratic touch at the origin).
// ---------------------------------------------------------------------------

struct PotentialSpec {
    double inner_radius = 0.0;      // L  (zero zone radius)
    double transition_radius = 1.0; // L' (> L, growth regime start)
    double beta = 3.0;              // growth exponent, >= 1
    double a0 = 1.0;                // growth amplitude, > 0

    static PotentialSpec shifted_power(double L, double Lprime, double beta, double a0);
    // Globally supported quadratic touch, U = a0 r^2 (the L = 0 aggregation case).
    static PotentialSpec quadratic(double a0, double Lprime = 1.0);

    void validate() const;

    double a1() const { return a0 * beta; }
    double a2() const { return a0 * beta * (beta - 1.0); }
    double growth_rescale() const;
    bool has_zero_zone() const { return inner_radius > 0.0; }
    bool quadratic_touch() const { return inner_radius == 0.0 && beta == 2.0; }
};

struct PotentialEval {
    double U = 0.0;
    double dU = 0.0;  // U'(r), >= 0
    double d2U = 0.0; // U''(r)
};

PotentialEval evaluate_potential(const PotentialSpec& spec, double r);

// U'(r) / r with its finite limit at r -> 0 (used to build pair forces
// without a 0/0 at coincident points).
double potential_slope_over_r(const PotentialSpec& spec, double r);

namespace quad {
// Adaptive Simpson quadrature; throws NumericalError when the tolerance is
// not reached within the depth budget.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double abs_tol, double rel_tol, int max_depth = 52);
} // namespace quad

} // namespace mflock
