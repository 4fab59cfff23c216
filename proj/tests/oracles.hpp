#pragma once

// Test-only oracles, independent of the library's numeric paths: a
// trapezoid/Richardson (Romberg) quadrature for cross-checking kernel
// integrals and a least-squares helper for order fits.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace oracle {

// Romberg integration on [a, b]; independent of the library's adaptive
// Simpson path.
inline double romberg(const std::function<double(double)>& f, double a, double b,
                      double tol = 1e-12, int max_rows = 22) {
    std::vector<std::vector<double>> R(1);
    double h = b - a;
    R[0].push_back(0.5 * h * (f(a) + f(b)));
    for (int i = 1; i < max_rows; ++i) {
        h *= 0.5;
        double sum = 0.0;
        const long npts = 1L << (i - 1);
        for (long k = 0; k < npts; ++k) sum += f(a + (2.0 * k + 1.0) * h);
        R.emplace_back();
        R[i].push_back(0.5 * R[i - 1][0] + h * sum);
        for (int j = 1; j <= i; ++j) {
            const double p = std::pow(4.0, j);
            R[i].push_back((p * R[i][j - 1] - R[i - 1][j - 1]) / (p - 1.0));
        }
        if (i > 3 && std::abs(R[i][i] - R[i - 1][i - 1]) <
                         tol * (1.0 + std::abs(R[i][i])))
            return R[i][i];
    }
    return R.back().back();
}

// Plain least-squares line fit y ~ a + b x; returns (slope, intercept, R^2).
struct LineFit {
    double slope = 0.0, intercept = 0.0, r2 = 0.0;
};

inline LineFit line_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("line_fit arity");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
        syy += y[i] * y[i];
    }
    LineFit out;
    const double den = n * sxx - sx * sx;
    out.slope = (n * sxy - sx * sy) / den;
    out.intercept = (sy - out.slope * sx) / n;
    const double ss_tot = syy - sy * sy / n;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (out.intercept + out.slope * x[i]);
        ss_res += r * r;
    }
    out.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return out;
}

} // namespace oracle
