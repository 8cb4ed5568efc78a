#include "worktraj/protocol_opt.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "worktraj/kernels.hpp"
#include "worktraj/moments.hpp"
#include "worktraj/time_grid.hpp"

namespace worktraj {

namespace {

constexpr double kGapCapBeta = 500.0;  // E capped at 500/beta (occupation ~ e^-500)
constexpr double kInfeasible = std::numeric_limits<double>::infinity();

double gap_from_occupation(double nbar, double beta) {
    if (nbar <= 0.0) return kGapCapBeta / beta;
    const double E = std::log1p(1.0 / nbar) / beta;
    return std::min(E, kGapCapBeta / beta);
}

}  // namespace

double invert_gap(const ErasureSpec& spec, double p_mid, double p_dot, int node) {
    const auto& bath = spec.bath;
    if (bath.coupling == BathSpec::Coupling::Constant) {
        const double denom = 1.0 - 2.0 * p_mid;
        const double num = p_dot / bath.gamma0 + p_mid;
        if (num < 0.0)
            throw FeasibilityError(
                "erasure infeasible: required occupation negative at node " +
                    std::to_string(node) + " (population falls faster than gamma p)",
                node);
        if (denom <= 0.0) return 0.0;  // p at 1/2: equilibrium at a degenerate gap
        return gap_from_occupation(num / denom, bath.beta);
    }
    // Ohmic: solve p_dot = gamma nbar - gamma (2nbar+1) p = ru(E) - (rd+ru)(E) p.
    // The residual decreases from kappa(1-2p)/beta at E = 0, so a monotone
    // decreasing path always admits a root.
    auto g = [&](double E) {
        const auto [rd, ru] = rates(E, bath);
        return ru - (rd + ru) * p_mid - p_dot;
    };
    double lo = 0.0, hi = 1.0 / bath.beta;
    if (g(lo) < 0.0)
        throw FeasibilityError(
            "erasure infeasible under Ohmic coupling at node " + std::to_string(node), node);
    while (g(hi) > 0.0) {
        hi *= 2.0;
        if (hi > kGapCapBeta / bath.beta) return kGapCapBeta / bath.beta;
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (g(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-14 * (1.0 + hi)) break;
    }
    return 0.5 * (lo + hi);
}

namespace {

struct PathEvaluator {
    const ErasureSpec* spec;
    double h;
    int M;

    double cell_gap(const std::vector<double>& p, int j) const {
        const double pm = 0.5 * (p[static_cast<size_t>(j)] + p[static_cast<size_t>(j) + 1]);
        const double pd = (p[static_cast<size_t>(j) + 1] - p[static_cast<size_t>(j)]) / h;
        return invert_gap(*spec, pm, pd, j);
    }

    // J = sum_j E_{j+1/2} (p_j - p_{j+1}) + p_M E_{M-1/2}  ( = -int E dp + p E |_tau )
    double total(const std::vector<double>& p) const {
        double J = 0.0;
        double last_gap = 0.0;
        for (int j = 0; j < M; ++j) {
            const double E = cell_gap(p, j);
            J += E * (p[static_cast<size_t>(j)] - p[static_cast<size_t>(j) + 1]);
            last_gap = E;
        }
        return J + p.back() * last_gap;
    }

    // Contribution of the cells touched by interior node j (j-1 and j), plus the
    // endpoint term when cell M-1 is touched.
    double local(const std::vector<double>& p, int j) const {
        double val = 0.0;
        for (int c = j - 1; c <= j; ++c) {
            if (c < 0 || c >= M) continue;
            double E;
            try {
                E = cell_gap(p, c);
            } catch (const FeasibilityError&) {
                return kInfeasible;
            }
            val += E * (p[static_cast<size_t>(c)] - p[static_cast<size_t>(c) + 1]);
            if (c == M - 1) val += p.back() * E;
        }
        return val;
    }
};

double golden_min(const std::function<double(double)>& f, double lo, double hi,
                  double tol) {
    const double gr = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - gr * (b - a);
    double x2 = a + gr * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 90 && b - a > tol; ++it) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = f(x2);
        }
    }
    return f1 <= f2 ? x1 : x2;
}

// One relaxation stage at a fixed resolution: a derivative-free coordinate
// sweep to shape the path inside its bounds, then damped Newton iterations
// with the finite-difference tridiagonal Hessian (each cell couples only
// neighboring nodes), which handles the long-wavelength coupling that
// coordinate moves cannot.
int relax_path(const ErasureSpec& spec, int M, std::vector<double>& p) {
    PathEvaluator ev{&spec, spec.tau / M, M};
    const double p_cap = 0.5 - 1e-12;
    // strict decrease per cell: keeps every inverted gap positive (a loitering
    // cell at p = 1/2 would pin E = 0 and leave the regularized rates pegged
    // at their ceiling for a whole segment)
    const double dec_min = (spec.p_start - spec.p_end) / (500.0 * M);
    int sweeps = 0;

    auto cell_cost = [&](const std::vector<double>& q, int c) -> double {
        double E;
        try {
            E = ev.cell_gap(q, c);
        } catch (const FeasibilityError&) {
            return kInfeasible;
        }
        double v = E * (q[static_cast<size_t>(c)] - q[static_cast<size_t>(c) + 1]);
        if (c == M - 1) v += q.back() * E;
        return v;
    };
    auto total = [&](const std::vector<double>& q) {
        double J = 0.0;
        for (int c = 0; c < M; ++c) {
            const double v = cell_cost(q, c);
            if (!std::isfinite(v)) return kInfeasible;
            J += v;
        }
        return J;
    };

    // coordinate warmup
    for (int pass = 0; pass < 30; ++pass) {
        double improved = 0.0;
        for (int j = 1; j < M; ++j) {
            const double keep0 = p[static_cast<size_t>(j)];
            // trust region: coordinate moves stay local so the sweep cannot
            // collapse a node onto its neighbor
            const double lo = std::max(p[static_cast<size_t>(j) + 1] + dec_min, keep0 * 0.8);
            const double hi = std::min({p[static_cast<size_t>(j) - 1] - dec_min,
                                        keep0 * 1.2, p_cap});
            if (hi - lo < 1e-15) continue;
            const double keep = p[static_cast<size_t>(j)];
            auto f = [&](double v) {
                p[static_cast<size_t>(j)] = v;
                const double val = ev.local(p, j);
                p[static_cast<size_t>(j)] = keep;
                return val;
            };
            const double base = f(keep);
            const double best = golden_min(f, lo, hi, 1e-12 * (1.0 + hi));
            const double fbest = f(best);
            if (fbest < base) {
                improved += base - fbest;
                p[static_cast<size_t>(j)] = best;
            }
        }
        ++sweeps;
        if (improved < 1e-12) break;
    }

    // projected damped Newton on the interior nodes
    double J = total(p);
    double mu = 1e-4;
    std::vector<double> grad(static_cast<size_t>(M) + 1, 0.0);
    std::vector<double> hd(static_cast<size_t>(M) + 1, 0.0);   // Hessian diagonal
    std::vector<double> ho(static_cast<size_t>(M) + 1, 0.0);   // H[j][j+1]
    for (int iter = 0; iter < 220; ++iter) {
        // finite-difference gradient and tridiagonal Hessian from local costs
        for (int j = 1; j < M; ++j) {
            const double keep = p[static_cast<size_t>(j)];
            const double d = std::max(1e-10, 1e-6 * keep);
            auto fl = [&](double v) {
                p[static_cast<size_t>(j)] = v;
                const double val = ev.local(p, j);
                p[static_cast<size_t>(j)] = keep;
                return val;
            };
            const double f0 = fl(keep), fp = fl(keep + d), fm = fl(keep - d);
            if (!std::isfinite(f0) || !std::isfinite(fp) || !std::isfinite(fm)) {
                grad[static_cast<size_t>(j)] = 0.0;
                hd[static_cast<size_t>(j)] = 1.0;
                continue;
            }
            grad[static_cast<size_t>(j)] = (fp - fm) / (2.0 * d);
            hd[static_cast<size_t>(j)] = std::max((fp - 2.0 * f0 + fm) / (d * d), 1e-12);
        }
        for (int j = 1; j + 1 < M; ++j) {
            // only cell j couples p_j and p_{j+1}
            const double dj = std::max(1e-10, 1e-6 * p[static_cast<size_t>(j)]);
            const double dk = std::max(1e-10, 1e-6 * p[static_cast<size_t>(j) + 1]);
            auto fc = [&](double a, double b) {
                std::vector<double>& q = p;
                const double ka = q[static_cast<size_t>(j)], kb = q[static_cast<size_t>(j) + 1];
                q[static_cast<size_t>(j)] = a;
                q[static_cast<size_t>(j) + 1] = b;
                const double val = cell_cost(q, j);
                q[static_cast<size_t>(j)] = ka;
                q[static_cast<size_t>(j) + 1] = kb;
                return val;
            };
            const double a = p[static_cast<size_t>(j)], b = p[static_cast<size_t>(j) + 1];
            const double v00 = fc(a, b), vpp = fc(a + dj, b + dk), vp0 = fc(a + dj, b),
                         v0p = fc(a, b + dk);
            ho[static_cast<size_t>(j)] =
                (std::isfinite(v00) && std::isfinite(vpp) && std::isfinite(vp0) &&
                 std::isfinite(v0p))
                    ? (vpp - vp0 - v0p + v00) / (dj * dk)
                    : 0.0;
        }

        bool accepted = false;
        for (int attempt = 0; attempt < 12 && !accepted; ++attempt) {
            // Thomas solve of (H + mu diag(H)) delta = -grad on nodes 1..M-1
            const int n = M - 1;
            std::vector<double> a(n), b(n), c(n), r(n);
            for (int i = 0; i < n; ++i) {
                const int j = i + 1;
                b[i] = hd[static_cast<size_t>(j)] * (1.0 + mu);
                a[i] = (i > 0) ? ho[static_cast<size_t>(j) - 1] : 0.0;
                c[i] = (i + 1 < n) ? ho[static_cast<size_t>(j)] : 0.0;
                r[i] = -grad[static_cast<size_t>(j)];
            }
            for (int i = 1; i < n; ++i) {
                const double w = a[i] / b[i - 1];
                b[i] -= w * c[i - 1];
                r[i] -= w * r[i - 1];
            }
            std::vector<double> delta(n);
            delta[n - 1] = r[n - 1] / b[n - 1];
            for (int i = n - 2; i >= 0; --i)
                delta[i] = (r[i] - c[i] * delta[i + 1]) / b[i];

            std::vector<double> trial = p;
            for (int i = 0; i < n; ++i)
                trial[static_cast<size_t>(i) + 1] += delta[static_cast<size_t>(i)];
            // project into the strictly decreasing band
            for (int j = 1; j < M; ++j) {
                trial[static_cast<size_t>(j)] =
                    std::min({trial[static_cast<size_t>(j)],
                              trial[static_cast<size_t>(j) - 1] - dec_min, p_cap});
                trial[static_cast<size_t>(j)] =
                    std::max(trial[static_cast<size_t>(j)], spec.p_end * 1e-3);
            }
            for (int j = M - 1; j >= 1; --j) {
                trial[static_cast<size_t>(j)] = std::max(
                    trial[static_cast<size_t>(j)], trial[static_cast<size_t>(j) + 1] + dec_min);
            }
            trial[0] = spec.p_start;
            trial[static_cast<size_t>(M)] = spec.p_end;
            const double Jt = total(trial);
            if (Jt < J - 1e-15) {
                p = std::move(trial);
                J = Jt;
                mu = std::max(1e-8, mu * 0.4);
                accepted = true;
            } else {
                mu *= 8.0;
            }
        }
        ++sweeps;
        if (!accepted) break;
    }
    return sweeps;
}

// log-linear resample of a positive monotone path onto a finer grid
std::vector<double> resample_path(const std::vector<double>& p, int M_new) {
    const int M_old = static_cast<int>(p.size()) - 1;
    std::vector<double> out(static_cast<size_t>(M_new) + 1);
    for (int j = 0; j <= M_new; ++j) {
        const double s = static_cast<double>(j) * M_old / M_new;
        const int k = std::min(M_old - 1, static_cast<int>(s));
        const double w = s - k;
        out[static_cast<size_t>(j)] =
            std::exp((1.0 - w) * std::log(p[static_cast<size_t>(k)]) +
                     w * std::log(p[static_cast<size_t>(k) + 1]));
    }
    out.front() = p.front();
    out.back() = p.back();
    return out;
}

std::vector<double> optimize_path(const ErasureSpec& spec, int M, int* sweeps_out,
                                  double* cost_out) {
    const double h = spec.tau / M;
    const auto& bath = spec.bath;

    // Zero-temperature speed limit (constant coupling): per cell the occupation
    // stays nonnegative only if p_{j+1} >= rho_min p_j.
    if (bath.coupling == BathSpec::Coupling::Constant) {
        const double gh = bath.gamma0 * h;
        if (gh < 2.0) {
            const double rho_min = (2.0 - gh) / (2.0 + gh);
            const double reachable = spec.p_start * std::pow(rho_min, M);
            if (reachable > spec.p_end) {
                throw FeasibilityError(
                    "erasure infeasible: fastest admissible decay reaches p = " +
                        std::to_string(reachable) + " > p_end at node " + std::to_string(M) +
                        "; increase tau",
                    M);
            }
        }
    }

    // Coarse-to-fine relaxation: coordinate moves propagate shape changes only
    // one node per sweep, so long-wavelength corrections are solved on coarse
    // grids first and interpolated up.
    std::vector<int> levels{M};
    while (levels.back() > 12) levels.push_back((levels.back() + 1) / 2);
    std::reverse(levels.begin(), levels.end());

    std::vector<double> p(static_cast<size_t>(levels.front()) + 1);
    const double rho = std::pow(spec.p_end / spec.p_start, 1.0 / levels.front());
    p[0] = spec.p_start;
    for (size_t j = 1; j < p.size(); ++j) p[j] = p[j - 1] * rho;
    p.back() = spec.p_end;

    int sweeps = 0;
    for (size_t l = 0; l < levels.size(); ++l) {
        if (l > 0) p = resample_path(p, levels[l]);
        sweeps += relax_path(spec, levels[l], p);
    }

    PathEvaluator ev{&spec, h, M};
    if (sweeps_out) *sweeps_out = sweeps;
    if (cost_out) *cost_out = ev.total(p);
    return p;
}

}  // namespace

double erasure_objective(const ErasureSpec& spec, const std::vector<double>& p_path) {
    spec.validate();
    const int M = static_cast<int>(p_path.size()) - 1;
    PathEvaluator ev{&spec, spec.tau / M, M};
    return ev.total(p_path);
}

ErasureResult optimize_erasure_protocol(const ErasureSpec& spec, bool refine_check) {
    spec.validate();
    const int M = spec.grid_size;
    const double h = spec.tau / M;

    ErasureResult res{DriveProtocol::linear(0.0, 1.0), {}, 0, 0, 0, 0, false, 0};
    res.p_path = optimize_path(spec, M, &res.sweeps, &res.cost_objective);

    // Piecewise-linear protocol through the cell-midpoint gaps; the first
    // segment ramps steeply from the degenerate start toward the optimal
    // initial gap (the continuous stand-in for an endpoint jump).
    PathEvaluator ev{&spec, h, M};
    std::vector<std::pair<double, double>> knots;
    knots.reserve(static_cast<size_t>(M) + 2);
    knots.emplace_back(0.0, 0.0);
    double prev_gap = 0.0;
    for (int j = 0; j < M; ++j) {
        const double E = ev.cell_gap(res.p_path, j);
        knots.emplace_back((j + 0.5) * h, E);
        prev_gap = E;
    }
    // extend the last half-cell with the closing slope to avoid a flat tail
    const double slope_end =
        M >= 2 ? (knots.back().second - knots[knots.size() - 2].second) / h : 0.0;
    knots.emplace_back(spec.tau, std::max(0.0, prev_gap + 0.5 * h * slope_end));
    res.protocol = DriveProtocol::piecewise_linear(std::move(knots));

    // Re-simulate through the n = 0,1 hierarchy for the honest cost and fidelity.
    GridOptions gopts;
    gopts.base_cells = std::max(400, 4 * M);
    gopts.u_ref = spec.bath.beta;
    const TimeGrid grid = make_time_grid(res.protocol, spec.bath, spec.tau, gopts);
    auto ens = EnsembleSpec::discrete({{spec.p_start, 1.0}}, "erasure-init");
    const auto ek = make_ensemble_kernels(ens, res.protocol, spec.bath, grid);
    const auto series = solve_moment_hierarchy(ek, 1);
    res.cost_resimulated = series.moment(1, series.last());
    res.p_end_achieved = series.excited_population(series.last());

    if (refine_check) {
        ErasureSpec fine = spec;
        fine.grid_size = 2 * M;
        int sweeps2 = 0;
        double cost2 = 0.0;
        optimize_path(fine, 2 * M, &sweeps2, &cost2);
        res.cost_refined = cost2;
        res.refined = true;
    }
    return res;
}

}  // namespace worktraj
