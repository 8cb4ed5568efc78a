#include "worktraj/time_grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace worktraj {

size_t TimeGrid::cell_of(double x) const {
    if (x <= t.front()) return 0;
    if (x >= t.back()) return cells() - 1;
    auto it = std::upper_bound(t.begin(), t.end(), x);
    size_t j = static_cast<size_t>(std::distance(t.begin(), it)) - 1;
    return std::min(j / 2, cells() - 1);
}

double TimeGrid::interpolate(const std::vector<double>& values, double x) const {
    if (x <= t.front()) return values.front();
    if (x >= t.back()) return values.back();
    auto it = std::upper_bound(t.begin(), t.end(), x);
    const size_t j = static_cast<size_t>(std::distance(t.begin(), it));
    const double t0 = t[j - 1], t1 = t[j];
    const double w = (x - t0) / (t1 - t0);
    return values[j - 1] + w * (values[j] - values[j - 1]);
}

TimeGrid TimeGrid::refined() const {
    TimeGrid g;
    g.singular_start = singular_start;
    g.t.reserve(2 * t.size());
    const size_t C = cells();
    for (size_t c = 0; c < C; ++c) {
        const double a = t[2 * c], m = t[2 * c + 1], b = t[2 * c + 2];
        g.t.push_back(a);
        g.t.push_back(0.5 * (a + m));
        g.t.push_back(m);
        g.t.push_back(0.5 * (m + b));
    }
    g.t.push_back(t.back());
    return g;
}

namespace {

std::pair<double, double> rate_range_on(const DriveProtocol& proto, const BathSpec& bath,
                                         double a, double b) {
    double lo = 1e300, hi = 0.0;
    for (int i = 0; i <= 4; ++i) {
        const double t = a + (b - a) * i / 4.0;
        const auto [rd, ru] = rates(proto.energy(t), bath);
        lo = std::min(lo, rd + ru);
        hi = std::max(hi, rd + ru);
    }
    return {lo, hi};
}

std::pair<double, double> edot_range_on(const DriveProtocol& proto, double a, double b) {
    double lo = 1e300, hi = 0.0;
    for (int i = 0; i <= 4; ++i) {
        const double t = a + (b - a) * i / 4.0;
        const double ed = std::fabs(proto.energy_dot(t));
        if (!std::isfinite(ed)) return {0.0, 1e300};
        lo = std::min(lo, ed);
        hi = std::max(hi, ed);
    }
    return {lo, hi};
}

double energy_span_on(const DriveProtocol& proto, double a, double b) {
    double lo = 1e300, hi = -1e300;
    for (int i = 0; i <= 4; ++i) {
        const double t = a + (b - a) * i / 4.0;
        const double E = proto.energy(t);
        lo = std::min(lo, E);
        hi = std::max(hi, E);
    }
    return hi - lo;
}

double max_phi_on(const DriveProtocol& proto, const BathSpec& bath, double beta, double a,
                  double b) {
    // |phi| for the xi second-order equation; sampled, conservative.
    double m = 0.0;
    for (int i = 0; i <= 4; ++i) {
        const double t = std::max(a + (b - a) * i / 4.0, a + 1e-14 * (b - a));
        const double E = proto.energy(t);
        const double ed = proto.energy_dot(t);
        const double edd = proto.energy_ddot(t);
        const auto [rd, ru] = rates(E, bath);
        double phi = std::fabs(rd + ru) + std::fabs(beta * ed * std::tanh(0.5 * beta * E));
        if (ed != 0.0 && std::isfinite(edd / ed)) phi += std::fabs(edd / ed);
        m = std::max(m, phi);
    }
    return m;
}

}  // namespace

TimeGrid make_time_grid(const DriveProtocol& protocol, const BathSpec& bath, double t_end,
                        const GridOptions& opts) {
    if (!(t_end > 0.0) || t_end > protocol.duration() * (1.0 + 1e-12))
        throw std::invalid_argument("make_time_grid: t_end must lie in (0, tau]");
    t_end = std::min(t_end, protocol.duration());

    // Cell boundaries: start from 0, protocol knots, and the uniform backbone.
    std::vector<double> bounds;
    bounds.push_back(0.0);
    for (const auto& k : protocol.knots()) {
        if (k.first > 0.0 && k.first < t_end) bounds.push_back(k.first);
    }
    const int n0 = std::max(1, opts.base_cells);
    for (int i = 1; i <= n0; ++i) bounds.push_back(t_end * i / n0);
    std::sort(bounds.begin(), bounds.end());
    bounds.erase(std::unique(bounds.begin(), bounds.end(),
                             [&](double x, double y) { return y - x < 1e-15 * t_end; }),
                 bounds.end());
    if (bounds.back() < t_end) bounds.push_back(t_end);

    const bool singular = protocol.singular_start();
    const double h0 = singular ? 1e-10 * t_end : 0.0;

    std::vector<double> cells_out;
    cells_out.push_back(0.0);
    if (singular) cells_out.push_back(h0);

    const double min_h = 1e-13 * t_end;
    auto ok = [&](double a, double b) {
        if (b - a <= min_h) return true;
        const auto [rlo, rhi] = rate_range_on(protocol, bath, a, b);
        if (rhi * (b - a) > opts.max_rate_step) return false;
        // geometric grading through integrable rate/slope singularities: RK4's
        // implicit in-cell quadrature needs the coefficients resolved, not just
        // bounded
        if (rhi * (b - a) > 1e-5 && rhi > opts.max_rate_ratio * rlo) return false;
        const double span = energy_span_on(protocol, a, b);
        if (opts.u_ref * span > opts.max_tilt_step) return false;
        if (opts.u_ref * span > 1e-5) {
            const auto [elo, ehi] = edot_range_on(protocol, a, b);
            if (ehi > opts.max_rate_ratio * elo) return false;
        }
        if (opts.phi_cap > 0.0 &&
            max_phi_on(protocol, bath, opts.beta, a, b) * (b - a) > opts.phi_cap)
            return false;
        return true;
    };

    // Depth-first bisection of each backbone interval.
    std::vector<std::pair<double, double>> stack;
    for (size_t i = bounds.size(); i-- > 1;) {
        double a = bounds[i - 1];
        const double b = bounds[i];
        if (singular && b <= h0) continue;
        if (singular && a < h0) a = h0;
        if (b > a) stack.emplace_back(a, b);
    }
    size_t produced = cells_out.size();
    while (!stack.empty()) {
        auto [a, b] = stack.back();
        stack.pop_back();
        if (ok(a, b)) {
            cells_out.push_back(b);
            if (++produced > opts.max_cells)
                throw std::runtime_error(
                    "make_time_grid: cell budget exceeded near t = " + std::to_string(a) +
                    " (cell width " + std::to_string(b - a) + ")");
        } else {
            const double m = 0.5 * (a + b);
            stack.emplace_back(m, b);
            stack.emplace_back(a, m);
        }
    }

    TimeGrid g;
    g.singular_start = singular;
    g.t.reserve(2 * cells_out.size());
    for (size_t i = 0; i + 1 < cells_out.size(); ++i) {
        g.t.push_back(cells_out[i]);
        g.t.push_back(0.5 * (cells_out[i] + cells_out[i + 1]));
    }
    g.t.push_back(cells_out.back());
    return g;
}

}  // namespace worktraj
