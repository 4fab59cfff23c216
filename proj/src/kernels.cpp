#include "multiflock/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mflock {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double support_end(const KernelSpec& spec) {
    if (spec.cutoff) return *spec.cutoff;
    return spec.table.empty() ? 0.0 : spec.table.back().first;
}

double table_value(const KernelSpec& spec, double r) {
    const auto& tab = spec.table;
    if (r > support_end(spec)) return 0.0;
    if (r <= tab.front().first) return tab.front().second;
    if (r >= tab.back().first) return tab.back().second;
    auto it = std::upper_bound(tab.begin(), tab.end(), r,
                               [](double v, const auto& knot) { return v < knot.first; });
    const auto& [r1, p1] = *it;
    const auto& [r0, p0] = *(it - 1);
    const double u = (r - r0) / (r1 - r0);
    return p0 + u * (p1 - p0);
}

// Exact integral of the piecewise-linear table over [a, b] (finite b assumed
// clipped to the support by the caller).
double table_integral(const KernelSpec& spec, double a, double b) {
    const auto& tab = spec.table;
    double total = 0.0;
    auto seg = [&](double lo, double hi) {
        if (hi <= lo) return;
        total += 0.5 * (table_value(spec, lo) + table_value(spec, hi)) * (hi - lo);
    };
    // Flat extension below the first knot, then linear pieces between knots.
    double cursor = a;
    const double first = tab.front().first;
    if (cursor < first) {
        const double hi = std::min(b, first);
        seg(cursor, hi);
        cursor = hi;
    }
    for (std::size_t k = 0; k + 1 < tab.size() && cursor < b; ++k) {
        const double lo = std::max(cursor, tab[k].first);
        const double hi = std::min(b, tab[k + 1].first);
        seg(lo, hi);
        cursor = std::max(cursor, hi);
    }
    // Flat extension between last knot and the cutoff (if any).
    if (cursor < b) seg(std::max(cursor, tab.back().first), b);
    return total;
}

// Integral of <r>^-e over [a, b] via the substitution r = sinh(u), which
// turns the integrand into cosh(u)^(1-e) with exponential decay for e > 1.
// Run well below the public tabulated-kernel tolerance so that additivity of
// tail_integral holds to 1e-10 relative.
double csmale_integral_numeric(double e, double a, double b) {
    const double ua = std::asinh(a);
    double ub;
    double tail = 0.0;
    if (std::isinf(b)) {
        // Truncate where the remainder 2^(e-1) exp(-(e-1)u)/(e-1) is negligible.
        const double em1 = e - 1.0;
        ub = ua + (45.0 + std::max(0.0, std::log(1.0 / em1))) / em1;
        tail = std::pow(2.0, em1) * std::exp(-em1 * ub) / em1;
    } else {
        ub = std::asinh(b);
    }
    auto f = [e](double u) { return std::pow(std::cosh(u), 1.0 - e); };
    return quad::adaptive_simpson(f, ua, ub, 1e-14, 1e-13) + tail;
}

} // namespace

namespace quad {

namespace {
double simpson(double a, double fa, double fm, double b, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adapt(const std::function<double(double)>& f, double a, double fa, double m, double fm,
             double b, double fb, double whole, double tol, int depth, double* worst) {
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson(a, fa, flm, m, fm);
    const double right = simpson(m, fm, frm, b, fb);
    const double err = left + right - whole;
    if (std::abs(err) <= 15.0 * tol) return left + right + err / 15.0;
    if (depth <= 0) {
        *worst = std::max(*worst, std::abs(err));
        return left + right;
    }
    return adapt(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1, worst) +
           adapt(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1, worst);
}
} // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double abs_tol, double rel_tol, int max_depth) {
    if (b <= a) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = simpson(a, fa, fm, b, fb);
    const double tol = std::max(abs_tol, rel_tol * std::abs(whole));
    double worst = 0.0;
    const double result = adapt(f, a, fa, m, fm, b, fb, whole, tol, max_depth, &worst);
    if (worst > 0.0 && worst > std::max(abs_tol, rel_tol * std::abs(result)))
        throw NumericalError("adaptive quadrature did not converge", worst);
    return result;
}

} // namespace quad

KernelSpec KernelSpec::constant_kernel(double c0) {
    KernelSpec k;
    k.family = KernelFamily::constant;
    k.c0 = c0;
    k.validate();
    return k;
}

KernelSpec KernelSpec::cucker_smale_kernel(double c0, double exponent) {
    KernelSpec k;
    k.family = KernelFamily::cucker_smale;
    k.c0 = c0;
    k.exponent = exponent;
    k.validate();
    return k;
}

KernelSpec KernelSpec::power_singular_kernel(double c0, double s) {
    KernelSpec k;
    k.family = KernelFamily::power_singular;
    k.c0 = c0;
    k.s = s;
    k.validate();
    return k;
}

KernelSpec KernelSpec::tabulated_kernel(std::vector<std::pair<double, double>> knots,
                                        std::optional<double> cutoff) {
    KernelSpec k;
    k.family = KernelFamily::tabulated;
    k.table = std::move(knots);
    k.cutoff = cutoff;
    k.validate();
    return k;
}

void KernelSpec::validate() const {
    if (!(c0 >= 0.0) || !std::isfinite(c0))
        throw std::invalid_argument("kernel amplitude c0 must be finite and >= 0");
    if (c0 == 0.0 && family != KernelFamily::constant)
        throw std::invalid_argument("c0 = 0 is only allowed for the constant family");
    switch (family) {
    case KernelFamily::constant:
        break;
    case KernelFamily::cucker_smale:
        if (!(exponent >= 0.0) || !std::isfinite(exponent))
            throw std::invalid_argument("cucker_smale exponent must be finite and >= 0");
        break;
    case KernelFamily::power_singular:
        if (!(s >= 0.0) || !(s < 2.0))
            throw std::invalid_argument("power_singular order s must satisfy 0 <= s < 2");
        break;
    case KernelFamily::tabulated: {
        if (table.size() < 2) throw std::invalid_argument("tabulated kernel needs >= 2 knots");
        for (std::size_t i = 0; i < table.size(); ++i) {
            auto [r, p] = table[i];
            if (!(r >= 0.0) || !std::isfinite(r) || !(p >= 0.0) || !std::isfinite(p))
                throw std::invalid_argument("tabulated knots must be finite with r, phi >= 0");
            if (i > 0 && !(r > table[i - 1].first))
                throw std::invalid_argument("tabulated knot radii must be strictly increasing");
            if (i > 0 && p > table[i - 1].second)
                throw std::invalid_argument("tabulated kernel must be non-increasing");
        }
        if (cutoff && !(*cutoff >= table.back().first))
            throw std::invalid_argument("tabulated cutoff must not truncate the table");
        break;
    }
    }
    if (cutoff && !(*cutoff > 0.0)) throw std::invalid_argument("cutoff must be positive");
}

double KernelSpec::sup_value() const {
    switch (family) {
    case KernelFamily::constant: return c0;
    case KernelFamily::cucker_smale: return c0; // <0> = 1
    case KernelFamily::power_singular: return kInf;
    case KernelFamily::tabulated: return table.front().second;
    }
    return 0.0;
}

double evaluate_kernel(const KernelSpec& spec, double r) {
    if (!(r >= 0.0)) throw std::invalid_argument("kernel argument r must be >= 0");
    if (spec.family == KernelFamily::power_singular) {
        // r^2 can underflow for representable r > 0; keep the r form exact.
        if (r == 0.0) throw DomainError("singular kernel evaluated at r = 0 (collision)");
        if (spec.s == 0.0) return spec.c0 / r;
        return spec.c0 * std::pow(r, -(1.0 + spec.s));
    }
    if (spec.family == KernelFamily::tabulated) return table_value(spec, r);
    return evaluate_kernel_r2(spec, r * r);
}

double evaluate_kernel_r2(const KernelSpec& spec, double r2) {
    if (!(r2 >= 0.0)) throw std::invalid_argument("kernel argument r^2 must be >= 0");
    switch (spec.family) {
    case KernelFamily::constant:
        return spec.c0;
    case KernelFamily::cucker_smale: {
        const double e = spec.exponent;
        if (e == 0.0) return spec.c0;
        const double q = 1.0 + r2;
        // sqrt-based fast paths for the common decay exponents
        if (e == 1.0) return spec.c0 / std::sqrt(q);
        if (e == 2.0) return spec.c0 / q;
        if (e == 0.5) return spec.c0 / std::sqrt(std::sqrt(q));
        return spec.c0 * std::pow(q, -0.5 * e);
    }
    case KernelFamily::power_singular:
        if (r2 == 0.0)
            throw DomainError("singular kernel evaluated at r = 0 (collision)");
        if (spec.s == 0.0) return spec.c0 / std::sqrt(r2);
        if (spec.s == 1.0) return spec.c0 / r2;
        return spec.c0 * std::pow(r2, -0.5 * (1.0 + spec.s));
    case KernelFamily::tabulated:
        return table_value(spec, std::sqrt(r2));
    }
    return 0.0;
}

TailClass classify_tail(const KernelSpec& spec) {
    switch (spec.family) {
    case KernelFamily::constant:
        return spec.c0 > 0.0 ? TailClass::fat_tail : TailClass::thin_tail;
    case KernelFamily::cucker_smale:
        return spec.exponent <= 1.0 ? TailClass::fat_tail : TailClass::thin_tail;
    case KernelFamily::power_singular:
        return spec.s == 0.0 ? TailClass::fat_tail : TailClass::thin_tail;
    case KernelFamily::tabulated:
        throw std::invalid_argument("tail class of a tabulated kernel cannot be decided analytically");
    }
    return TailClass::thin_tail;
}

HeadClass classify_head(const KernelSpec& spec) {
    return spec.family == KernelFamily::power_singular ? HeadClass::fat_head
                                                       : HeadClass::integrable_head;
}

double tail_integral(const KernelSpec& spec, double a, double b) {
    if (!(a >= 0.0) || !(b > a)) throw std::invalid_argument("tail_integral needs 0 <= a < b");
    const bool binf = std::isinf(b);
    switch (spec.family) {
    case KernelFamily::constant:
        if (binf) return spec.c0 > 0.0 ? kInf : 0.0;
        return spec.c0 * (b - a);
    case KernelFamily::cucker_smale: {
        const double e = spec.exponent;
        if (e == 0.0) return binf ? (spec.c0 > 0.0 ? kInf : 0.0) : spec.c0 * (b - a);
        if (binf && e <= 1.0) return kInf;
        if (e == 1.0) return spec.c0 * (std::asinh(b) - std::asinh(a));
        if (e == 2.0) {
            const double upper = binf ? std::atan(1.0) * 2.0 : std::atan(b);
            return spec.c0 * (upper - std::atan(a));
        }
        return spec.c0 * csmale_integral_numeric(e, a, b);
    }
    case KernelFamily::power_singular: {
        if (a == 0.0) return kInf; // fat head
        if (spec.s == 0.0) return binf ? kInf : spec.c0 * std::log(b / a);
        const double upper = binf ? 0.0 : std::pow(b, -spec.s);
        return spec.c0 * (std::pow(a, -spec.s) - upper) / spec.s;
    }
    case KernelFamily::tabulated: {
        const double hi = std::min(binf ? support_end(spec) : b, support_end(spec));
        if (hi <= a) return 0.0;
        return table_integral(spec, a, hi);
    }
    }
    return 0.0;
}

PotentialSpec PotentialSpec::shifted_power(double L, double Lprime, double beta, double a0) {
    PotentialSpec p;
    p.inner_radius = L;
    p.transition_radius = Lprime;
    p.beta = beta;
    p.a0 = a0;
    p.validate();
    return p;
}

PotentialSpec PotentialSpec::quadratic(double a0, double Lprime) {
    return shifted_power(0.0, Lprime, 2.0, a0);
}

void PotentialSpec::validate() const {
    if (!(inner_radius >= 0.0)) throw std::invalid_argument("potential inner radius L must be >= 0");
    if (!(transition_radius > inner_radius))
        throw std::invalid_argument("potential requires L' > L");
    if (!(beta >= 1.0)) throw std::invalid_argument("potential growth exponent beta must be >= 1");
    if (!(a0 > 0.0)) throw std::invalid_argument("potential amplitude a0 must be > 0");
    // C^2 regularity of ((r-L)_+)^beta: smooth at the kink only for beta > 2,
    // except the globally supported quadratic touch L = 0, beta = 2.
    if (inner_radius > 0.0 && !(beta > 2.0))
        throw std::invalid_argument("2-zone potential with L > 0 requires beta > 2 for C^2");
    if (inner_radius == 0.0 && !(beta >= 2.0))
        throw std::invalid_argument("globally supported potential requires beta >= 2 for C^2");
}

double PotentialSpec::growth_rescale() const {
    return std::pow(1.0 - inner_radius / transition_radius, beta);
}

PotentialEval evaluate_potential(const PotentialSpec& spec, double r) {
    if (!(r >= 0.0)) throw std::invalid_argument("potential argument r must be >= 0");
    PotentialEval out;
    const double q = r - spec.inner_radius;
    if (q <= 0.0) return out;
    const double b = spec.beta;
    out.U = spec.a0 * std::pow(q, b);
    out.dU = spec.a0 * b * std::pow(q, b - 1.0);
    out.d2U = spec.a0 * b * (b - 1.0) * (b == 2.0 ? 1.0 : std::pow(q, b - 2.0));
    return out;
}

double potential_slope_over_r(const PotentialSpec& spec, double r) {
    if (r <= spec.inner_radius) {
        // Inside the zero zone; at r = 0 the only nonzero limit is the
        // quadratic touch U = a0 r^2 with U'(r)/r -> 2 a0.
        if (r == 0.0 && spec.quadratic_touch()) return 2.0 * spec.a0;
        return 0.0;
    }
    return evaluate_potential(spec, r).dU / r;
}

} // namespace mflock
