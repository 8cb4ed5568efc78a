#pragma once

// Test-side numerical oracles, deliberately independent of the library's
// quadrature and solver code paths.

#include <cmath>
#include <functional>
#include <vector>

namespace testsupport {

// Romberg integration (Richardson-extrapolated trapezoids).
inline double romberg(const std::function<double(double)>& f, double a, double b,
                      int max_level = 20, double tol = 1e-12) {
    if (a == b) return 0.0;
    std::vector<std::vector<double>> r(1);
    const double h0 = b - a;
    r[0].push_back(0.5 * h0 * (f(a) + f(b)));
    for (int k = 1; k <= max_level; ++k) {
        const double h = h0 / std::pow(2.0, k);
        double s = 0.0;
        const long n = 1L << (k - 1);
        for (long i = 0; i < n; ++i) s += f(a + (2.0 * i + 1.0) * h);
        std::vector<double> row;
        row.push_back(0.5 * r[k - 1][0] + h * s);
        for (int j = 1; j <= k; ++j) {
            const double pw = std::pow(4.0, j);
            row.push_back((pw * row[j - 1] - r[k - 1][j - 1]) / (pw - 1.0));
        }
        if (k > 3 && std::fabs(row.back() - r[k - 1].back()) <
                         tol * (1.0 + std::fabs(row.back()))) {
            return row.back();
        }
        r.push_back(std::move(row));
    }
    return r.back().back();
}

// Gauss-Kronrod-free adaptive trapezoid fallback for integrands with kinks.
inline double refine_trapezoid(const std::function<double(double)>& f, double a, double b,
                               int levels = 22) {
    double prev = 0.5 * (b - a) * (f(a) + f(b));
    long n = 1;
    for (int k = 0; k < levels; ++k) {
        const double h = (b - a) / (2.0 * n);
        double s = 0.0;
        for (long i = 0; i < n; ++i) s += f(a + (2.0 * i + 1.0) * h);
        prev = 0.5 * prev + h * s;
        n *= 2;
    }
    return prev;
}

}  // namespace testsupport
