#include "worktraj/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "worktraj/quadrature.hpp"

namespace worktraj {

KernelTable make_kernel_table(const DriveProtocol& protocol, const BathSpec& bath,
                              const TimeGrid& grid) {
    KernelTable kt;
    kt.grid = grid;
    const size_t n = grid.t.size();
    kt.energy.resize(n);
    kt.edot.resize(n);
    kt.rate_down.resize(n);
    kt.rate_up.resize(n);
    kt.lam_down.assign(n, 0.0);
    kt.lam_up.assign(n, 0.0);
    kt.k_e.resize(n);
    kt.k_g.resize(n);

    for (size_t j = 0; j < n; ++j) {
        const double t = grid.t[j];
        kt.energy[j] = protocol.energy(t);
        const double ed = protocol.energy_dot(t);
        kt.edot[j] = std::isfinite(ed) ? ed : 0.0;
        const auto [rd, ru] = rates(kt.energy[j], bath);
        kt.rate_down[j] = rd;
        kt.rate_up[j] = ru;
    }

    auto rd_fn = [&](double t) { return rates(protocol.energy(t), bath).first; };
    auto ru_fn = [&](double t) { return rates(protocol.energy(t), bath).second; };
    for (size_t j = 1; j < n; ++j) {
        const double a = grid.t[j - 1], b = grid.t[j];
        kt.lam_down[j] = kt.lam_down[j - 1] + adaptive_simpson(rd_fn, a, b, 1e-13);
        kt.lam_up[j] = kt.lam_up[j - 1] + adaptive_simpson(ru_fn, a, b, 1e-13);
    }
    for (size_t j = 0; j < n; ++j) {
        kt.k_e[j] = std::exp(-kt.lam_down[j]);
        kt.k_g[j] = std::exp(-kt.lam_up[j]);
    }

    kt.rate_down_stage = kt.rate_down;
    kt.rate_up_stage = kt.rate_up;
    kt.edot_stage = kt.edot;
    for (size_t cell = 0; 2 * cell + 2 < n; ++cell) {
        const size_t j0 = 2 * cell, j1 = 2 * cell + 1, j2 = 2 * cell + 2;
        const double h = grid.t[j2] - grid.t[j0];
        if (!(h > 0.0)) continue;
        auto fix = [&](std::vector<double>& stage, const std::vector<double>& raw,
                       double exact_integral) {
            const double mid = (6.0 * exact_integral / h - raw[j0] - raw[j2]) / 4.0;
            stage[j1] = std::max(0.0, mid);
        };
        fix(kt.rate_down_stage, kt.rate_down, kt.lam_down[j2] - kt.lam_down[j0]);
        fix(kt.rate_up_stage, kt.rate_up, kt.lam_up[j2] - kt.lam_up[j0]);
        // the drive integral over a cell is just the energy difference
        const double mid_e = (6.0 * (kt.energy[j2] - kt.energy[j0]) / h - kt.edot[j0] -
                              kt.edot[j2]) / 4.0;
        kt.edot_stage[j1] = mid_e;
    }
    return kt;
}

PrepKernel make_prep_kernel(const PurePrep& prep, const KernelTable& kt,
                            const DriveProtocol& protocol) {
    (void)protocol;
    prep.validate();
    PrepKernel pk;
    pk.p_e = prep.p_e;
    pk.weight = prep.weight;
    const size_t n = kt.grid.t.size();
    pk.pe_null.resize(n);
    pk.w_null.assign(n, 0.0);
    pk.p_null.resize(n);
    pk.a.resize(n);

    const double pe = prep.p_e, pg = 1.0 - prep.p_e;
    for (size_t j = 0; j < n; ++j) {
        // r = K_e/K_g <= 1; dividing through by K_g keeps the ratio well posed
        // long after both kernels underflow individually.
        const double r = std::exp(-(kt.lam_down[j] - kt.lam_up[j]));
        const double denom = pe * r + pg;
        double f = (denom > 0.0) ? pe * r / denom : (pe > 0.5 ? 1.0 : 0.0);
        f = std::min(1.0, std::max(0.0, f));
        pk.pe_null[j] = f;
        pk.p_null[j] = pe * kt.k_e[j] + pg * kt.k_g[j];
        pk.a[j] = (denom > 0.0) ? pe * pg * kt.k_e[j] / denom : 0.0;
    }

    // Cumulative W_null = int pe_null dE, integrated in the energy variable per
    // half-cell so unbounded Edot at a singular start never gets sampled.
    for (size_t j = 1; j < n; ++j) {
        const size_t c = (j - 1) / 2;
        const size_t j0 = 2 * c, j1 = 2 * c + 1, j2 = 2 * c + 2;
        const double E0 = kt.energy[j0], E1 = kt.energy[j1], E2 = kt.energy[j2];
        const bool monotone = ((E1 - E0) >= 0.0 && (E2 - E1) >= 0.0) ||
                              ((E1 - E0) <= 0.0 && (E2 - E1) <= 0.0);
        double inc;
        if (monotone) {
            const double ea = (j % 2 == 1) ? E0 : E1;
            const double eb = (j % 2 == 1) ? E1 : E2;
            inc = quadratic_segment_integral_partial(E0, E1, E2, pk.pe_null[j0],
                                                     pk.pe_null[j1], pk.pe_null[j2], ea, eb);
        } else {
            // rare non-monotone cell: quadrature in t on the product pe_null * Edot
            const double t0 = kt.grid.t[j0], t1 = kt.grid.t[j1], t2 = kt.grid.t[j2];
            const double g0 = pk.pe_null[j0] * kt.edot[j0];
            const double g1 = pk.pe_null[j1] * kt.edot[j1];
            const double g2 = pk.pe_null[j2] * kt.edot[j2];
            const double ta = (j % 2 == 1) ? t0 : t1;
            const double tb = (j % 2 == 1) ? t1 : t2;
            inc = quadratic_segment_integral_partial(t0, t1, t2, g0, g1, g2, ta, tb);
        }
        pk.w_null[j] = pk.w_null[j - 1] + inc;
    }
    return pk;
}

EnsembleKernels make_ensemble_kernels(const EnsembleSpec& ensemble,
                                      const DriveProtocol& protocol, const BathSpec& bath,
                                      const TimeGrid& grid) {
    EnsembleKernels ek;
    ek.kt = make_kernel_table(protocol, bath, grid);
    ek.preps.reserve(ensemble.preps().size());
    for (const auto& prep : ensemble.preps()) {
        ek.preps.push_back(make_prep_kernel(prep, ek.kt, protocol));
    }
    return ek;
}

std::vector<double> EnsembleKernels::moment_integral(int m) const {
    if (m < 0) throw std::invalid_argument("moment_integral: m must be >= 0");
    const size_t n = kt.grid.t.size();
    std::vector<double> out(n, 0.0);
    for (const auto& p : preps) {
        for (size_t j = 0; j < n; ++j) {
            const double wpow = (m == 0) ? 1.0 : std::pow(p.w_null[j], m);
            out[j] += p.weight * wpow * p.a[j];
        }
    }
    return out;
}

std::vector<double> EnsembleKernels::exp_integral(double u) const {
    const size_t n = kt.grid.t.size();
    std::vector<double> out(n, 0.0);
    for (const auto& p : preps) {
        for (size_t j = 0; j < n; ++j) {
            out[j] += p.weight * std::exp(-u * p.w_null[j]) * p.a[j];
        }
    }
    return out;
}

double null_work(const PrepKernel& pk, const TimeGrid& grid, double t) {
    return grid.interpolate(pk.w_null, t);
}

double null_probability(const PrepKernel& pk, const TimeGrid& grid, double t) {
    return grid.interpolate(pk.p_null, t);
}

double coherence_weight(const PrepKernel& pk, const TimeGrid& grid, double t) {
    return grid.interpolate(pk.a, t);
}

double ensemble_coherence_weight(const EnsembleKernels& ek, double t) {
    double s = 0.0;
    for (const auto& p : ek.preps) s += p.weight * coherence_weight(p, ek.kt.grid, t);
    return s;
}

TwoByTwo coherence_source_moment(const EnsembleKernels& ek, const DriveProtocol& protocol,
                                 double t, int n) {
    if (n < 0) throw std::invalid_argument("coherence_source_moment: n must be >= 0");
    if (n == 0) return TwoByTwo::zero();
    double integral = 0.0;
    for (const auto& p : ek.preps) {
        const double w = ek.kt.grid.interpolate(p.w_null, t);
        const double a = ek.kt.grid.interpolate(p.a, t);
        integral += p.weight * ((n == 1) ? 1.0 : std::pow(w, n - 1)) * a;
    }
    const double v = n * protocol.energy_dot(t) * integral;
    return TwoByTwo::diag(-v, v);
}

TwoByTwo coherence_source_mgf(const EnsembleKernels& ek, const DriveProtocol& protocol,
                              double u, double t) {
    if (u == 0.0) return TwoByTwo::zero();
    double j_u = 0.0;
    for (const auto& p : ek.preps) {
        const double w = ek.kt.grid.interpolate(p.w_null, t);
        const double a = ek.kt.grid.interpolate(p.a, t);
        j_u += p.weight * std::exp(-u * w) * a;
    }
    const double v = u * protocol.energy_dot(t) * j_u;
    return TwoByTwo::diag(v, -v);
}

TwoByTwo coherence_source_mgf_direct(const EnsembleKernels& ek,
                                     const DriveProtocol& protocol, double u, double t) {
    const double edot = protocol.energy_dot(t);
    const double ke = ek.kt.grid.interpolate(ek.kt.k_e, t);
    const double kg = ek.kt.grid.interpolate(ek.kt.k_g, t);
    double ee = 0.0, gg = 0.0;
    for (const auto& p : ek.preps) {
        const double w = ek.kt.grid.interpolate(p.w_null, t);
        const double pen = ek.kt.grid.interpolate(p.pe_null, t);
        const double wdot = edot * pen;
        const double tilt = std::exp(-u * w);
        ee += p.weight * tilt * u * (edot - wdot) * (p.p_e * ke);
        gg += p.weight * tilt * u * (0.0 - wdot) * ((1.0 - p.p_e) * kg);
    }
    return {ee, 0.0, 0.0, gg};
}

KernelResolutionReport check_kernel_resolution(const EnsembleSpec& ensemble,
                                               const DriveProtocol& protocol,
                                               const BathSpec& bath, const TimeGrid& grid) {
    const auto coarse = make_ensemble_kernels(ensemble, protocol, bath, grid);
    const auto fine = make_ensemble_kernels(ensemble, protocol, bath, grid.refined());
    KernelResolutionReport rep;
    const size_t n = grid.t.size();
    for (size_t j = 0; j < n; ++j) {
        // coarse fine-node j sits at fine-grid index 2j
        rep.max_kernel_change = std::max(
            rep.max_kernel_change, std::fabs(coarse.kt.k_e[j] - fine.kt.k_e[2 * j]));
        rep.max_kernel_change = std::max(
            rep.max_kernel_change, std::fabs(coarse.kt.k_g[j] - fine.kt.k_g[2 * j]));
        for (size_t i = 0; i < coarse.preps.size(); ++i) {
            rep.max_w_null_change =
                std::max(rep.max_w_null_change,
                         std::fabs(coarse.preps[i].w_null[j] - fine.preps[i].w_null[2 * j]));
        }
    }
    return rep;
}

}  // namespace worktraj
