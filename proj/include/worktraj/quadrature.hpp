#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace worktraj {

// Adaptive Simpson integration. Robust against mild kinks (e.g. a rate law
// crossing its regularization floor); tol is treated as mixed abs/rel.
namespace detail {
template <typename F>
double adaptive_simpson_rec(const F& f, double a, double b, double fa, double fm,
                            double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double h = b - a;
    const double left = (h / 12.0) * (fa + 4.0 * flm + fm);
    const double right = (h / 12.0) * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

template <typename F>
double adaptive_simpson(const F& f, double a, double b, double tol = 1e-12,
                        int max_depth = 48) {
    if (a == b) return 0.0;
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = ((b - a) / 6.0) * (fa + 4.0 * fm + fb);
    const double scaled = tol * (1.0 + std::fabs(whole));
    return detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, scaled, max_depth);
}

// Integral over a sub-range [a, b] of the quadratic interpolant through
// (x0,f0), (x1,f1), (x2,f2). Nodes need not be evenly spaced. Everything is
// recentered at x0 so nearly coincident nodes stay well conditioned.
inline double quadratic_segment_integral_partial(double x0, double x1, double x2,
                                                 double f0, double f1, double f2,
                                                 double a, double b) {
    const double y1 = x1 - x0, y2 = x2 - x0;
    const double ya = a - x0, yb = b - x0;
    const double d01 = -y1, d02 = -y2, d12 = y1 - y2;
    if (d01 == 0.0 || d12 == 0.0 || d02 == 0.0) {
        // degenerate node layout: integrate the secant through the endpoints
        const double slope = (y2 != 0.0) ? (f2 - f0) / y2 : 0.0;
        auto F = [&](double y) { return f0 * y + 0.5 * slope * y * y; };
        return F(yb) - F(ya);
    }
    auto poly_int = [&](double r1, double r2) {
        // integral of (y - r1)(y - r2) over [ya, yb] in the recentered frame
        auto F = [&](double y) {
            return y * y * y / 3.0 - 0.5 * (r1 + r2) * y * y + r1 * r2 * y;
        };
        return F(yb) - F(ya);
    };
    const double I0 = poly_int(y1, y2) / (d01 * d02);
    const double I1 = poly_int(0.0, y2) / (-d01 * d12);
    const double I2 = poly_int(0.0, y1) / (d02 * d12);
    return f0 * I0 + f1 * I1 + f2 * I2;
}

// Full-cell integral over [x0, x2].
inline double quadratic_segment_integral(double x0, double x1, double x2, double f0,
                                         double f1, double f2) {
    return quadratic_segment_integral_partial(x0, x1, x2, f0, f1, f2, x0, x2);
}

// Gauss-Legendre nodes/weights on [0, 1], by Newton iteration on P_m.
inline void gauss_legendre_01(int m, std::vector<double>& nodes,
                              std::vector<double>& weights) {
    if (m < 1) throw std::invalid_argument("gauss_legendre_01: m must be >= 1");
    nodes.assign(static_cast<size_t>(m), 0.0);
    weights.assign(static_cast<size_t>(m), 0.0);
    const double pi = 3.14159265358979323846;
    for (int i = 0; i < (m + 1) / 2; ++i) {
        double x = std::cos(pi * (i + 0.75) / (m + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < m; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = m * (x * p0 - p1) / (x * x - 1.0);
            const double dx = p0 / pp;
            x -= dx;
            if (std::fabs(dx) < 1e-15) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * pp * pp);
        nodes[static_cast<size_t>(i)] = 0.5 * (1.0 - x);
        nodes[static_cast<size_t>(m - 1 - i)] = 0.5 * (1.0 + x);
        weights[static_cast<size_t>(i)] = 0.5 * w;
        weights[static_cast<size_t>(m - 1 - i)] = 0.5 * w;
    }
}

// Standard moment -> cumulant inversion, mu_m = kappa_m +
// sum_{l=1}^{m-1} C(m-1, l-1) kappa_l mu_{m-l}. Supports orders up to 4 here.
inline std::vector<double> cumulants_from_moments(const std::vector<double>& mu) {
    if (mu.size() > 4)
        throw std::invalid_argument("cumulants_from_moments: orders above 4 not supported");
    auto binom = [](int n, int k) {
        double r = 1.0;
        for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
        return r;
    };
    std::vector<double> kappa(mu.size(), 0.0);
    for (size_t m = 1; m <= mu.size(); ++m) {
        double s = 0.0;
        for (size_t l = 1; l < m; ++l) {
            const double mu_rest = (m - l == 0) ? 1.0 : mu[m - l - 1];
            s += binom(static_cast<int>(m) - 1, static_cast<int>(l) - 1) *
                 kappa[l - 1] * mu_rest;
        }
        kappa[m - 1] = mu[m - 1] - s;
    }
    return kappa;
}

}  // namespace worktraj
