#include "worktraj/moments.hpp"

#include <cmath>
#include <stdexcept>

#include "worktraj/quadrature.hpp"

namespace worktraj {

std::vector<double> MomentSeries::moments_at(size_t b) const {
    std::vector<double> mu(static_cast<size_t>(n_max));
    for (int n = 1; n <= n_max; ++n) mu[static_cast<size_t>(n) - 1] = moment(n, b);
    return mu;
}

std::vector<double> MomentSeries::cumulants_at(size_t b) const {
    auto mu = moments_at(b);
    if (mu.size() > 4) mu.resize(4);
    return cumulants_from_moments(mu);
}

double MomentSeries::variance(size_t b) const {
    const double m1 = moment(1, b);
    return moment(2, b) - m1 * m1;
}

namespace {

// -R G with R = [[rd, -ru], [-rd, ru]] in (e, g) ordering.
inline TwoByTwo minus_R_times(double rd, double ru, const TwoByTwo& g) {
    return {-(rd * g.ee - ru * g.ge), -(rd * g.eg - ru * g.gg),
            -(-rd * g.ee + ru * g.ge), -(-rd * g.eg + ru * g.gg)};
}

struct HierarchyRhs {
    const KernelTable* kt;
    const std::vector<std::vector<double>>* I;  // I[m][node], m = 0..n_max-1
    int n_max;

    void operator()(size_t j, const std::vector<TwoByTwo>& x,
                    std::vector<TwoByTwo>& out) const {
        const double rd = kt->rate_down_stage[j];
        const double ru = kt->rate_up_stage[j];
        const double ed = kt->edot_stage[j];
        for (int n = 0; n <= n_max; ++n) {
            const size_t un = static_cast<size_t>(n);
            TwoByTwo d = minus_R_times(rd, ru, x[un]);
            if (n >= 1) {
                const TwoByTwo& prev = x[un - 1];
                d.ee += n * ed * prev.ee;
                d.eg += n * ed * prev.eg;
                const double c = n * ed * (*I)[un - 1][j];
                d.ee -= c;
                d.gg += c;
            }
            out[un] = d;
        }
    }
};

struct MgfRhs {
    const KernelTable* kt;
    const std::vector<double>* J;  // J_u[node]
    double u;

    void operator()(size_t j, const std::vector<TwoByTwo>& x,
                    std::vector<TwoByTwo>& out) const {
        const double rd = kt->rate_down_stage[j];
        const double ru = kt->rate_up_stage[j];
        const double ed = kt->edot_stage[j];
        TwoByTwo d = minus_R_times(rd, ru, x[0]);
        d.ee -= u * ed * x[0].ee;
        d.eg -= u * ed * x[0].eg;
        const double c = u * ed * (*J)[j];
        d.ee += c;
        d.gg -= c;
        out[0] = d;
    }
};

template <typename Rhs>
void rk4_march(const TimeGrid& grid, const Rhs& rhs, std::vector<TwoByTwo>& state,
               size_t first_cell, std::vector<std::vector<TwoByTwo>>& record) {
    const size_t m = state.size();
    std::vector<TwoByTwo> k1(m), k2(m), k3(m), k4(m), tmp(m);
    for (size_t c = first_cell; c < grid.cells(); ++c) {
        const size_t j0 = 2 * c, j1 = 2 * c + 1, j2 = 2 * c + 2;
        const double h = grid.t[j2] - grid.t[j0];
        rhs(j0, state, k1);
        for (size_t i = 0; i < m; ++i) tmp[i] = state[i] + (0.5 * h) * k1[i];
        rhs(j1, tmp, k2);
        for (size_t i = 0; i < m; ++i) tmp[i] = state[i] + (0.5 * h) * k2[i];
        rhs(j1, tmp, k3);
        for (size_t i = 0; i < m; ++i) tmp[i] = state[i] + h * k3[i];
        rhs(j2, tmp, k4);
        for (size_t i = 0; i < m; ++i) {
            state[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        record.push_back(state);
    }
}

// Null-sector state one micro-cell in from a drive whose slope is unbounded at
// t = 0: survivors carry their exact kernels and accumulated work; the O(Lambda)
// jumped mass is reassigned to the off-diagonal slots with negligible work.
std::vector<TwoByTwo> singular_start_state_hierarchy(const EnsembleKernels& ek, int n_max) {
    std::vector<TwoByTwo> x(static_cast<size_t>(n_max) + 1, TwoByTwo::zero());
    const size_t j = 2;  // fine-node index of the first cell's right boundary
    for (const auto& p : ek.preps) {
        const double pe = p.p_e, pg = 1.0 - p.p_e;
        const double ke = ek.kt.k_e[j], kg = ek.kt.k_g[j];
        const double w = p.w_null[j];
        x[0].ee += p.weight * pe * ke;
        x[0].gg += p.weight * pg * kg;
        x[0].ge += p.weight * pe * (1.0 - ke);
        x[0].eg += p.weight * pg * (1.0 - kg);
        double wpow = 1.0;
        for (int n = 1; n <= n_max; ++n) {
            wpow *= w;
            x[static_cast<size_t>(n)].ee += p.weight * pe * ke * wpow;
            x[static_cast<size_t>(n)].gg += p.weight * pg * kg * wpow;
        }
    }
    return x;
}

std::vector<TwoByTwo> singular_start_state_mgf(const EnsembleKernels& ek, double u) {
    std::vector<TwoByTwo> x(1, TwoByTwo::zero());
    const size_t j = 2;
    for (const auto& p : ek.preps) {
        const double pe = p.p_e, pg = 1.0 - p.p_e;
        const double ke = ek.kt.k_e[j], kg = ek.kt.k_g[j];
        const double tilt = std::exp(-u * p.w_null[j]);
        x[0].ee += p.weight * pe * ke * tilt;
        x[0].gg += p.weight * pg * kg * tilt;
        x[0].ge += p.weight * pe * (1.0 - ke);
        x[0].eg += p.weight * pg * (1.0 - kg);
    }
    return x;
}

}  // namespace

MomentSeries solve_moment_hierarchy(const EnsembleKernels& ek, int n_max) {
    if (n_max < 1) throw std::invalid_argument("solve_moment_hierarchy: n_max must be >= 1");
    const TimeGrid& grid = ek.kt.grid;

    std::vector<std::vector<double>> I(static_cast<size_t>(n_max));
    for (int m = 0; m < n_max; ++m) I[static_cast<size_t>(m)] = ek.moment_integral(m);

    double pbar = 0.0;
    for (const auto& p : ek.preps) pbar += p.weight * p.p_e;

    MomentSeries out;
    out.n_max = n_max;
    std::vector<TwoByTwo> state(static_cast<size_t>(n_max) + 1, TwoByTwo::zero());
    state[0] = TwoByTwo::diag(pbar, 1.0 - pbar);
    out.times.push_back(grid.t.front());
    out.G.push_back(state);

    size_t first_cell = 0;
    if (grid.singular_start) {
        state = singular_start_state_hierarchy(ek, n_max);
        out.times.push_back(grid.t[2]);
        out.G.push_back(state);
        first_cell = 1;
    }

    HierarchyRhs rhs{&ek.kt, &I, n_max};
    rk4_march(grid, rhs, state, first_cell, out.G);
    for (size_t c = first_cell; c < grid.cells(); ++c) out.times.push_back(grid.t[2 * c + 2]);
    return out;
}

MgfSeries solve_mgf(const EnsembleKernels& ek, const std::vector<double>& u_list) {
    const TimeGrid& grid = ek.kt.grid;
    double pbar = 0.0;
    for (const auto& p : ek.preps) pbar += p.weight * p.p_e;

    MgfSeries out;
    out.u_values = u_list;
    out.times.push_back(grid.t.front());
    if (grid.singular_start) out.times.push_back(grid.t[2]);
    for (size_t c = grid.singular_start ? 1 : 0; c < grid.cells(); ++c)
        out.times.push_back(grid.t[2 * c + 2]);

    for (double u : u_list) {
        if (!std::isfinite(u)) throw std::invalid_argument("solve_mgf: u must be finite");
        const auto J = ek.exp_integral(u);
        std::vector<TwoByTwo> state(1, TwoByTwo::diag(pbar, 1.0 - pbar));
        std::vector<std::vector<TwoByTwo>> rec;
        rec.push_back(state);
        size_t first_cell = 0;
        if (grid.singular_start) {
            state = singular_start_state_mgf(ek, u);
            rec.push_back(state);
            first_cell = 1;
        }
        MgfRhs rhs{&ek.kt, &J, u};
        rk4_march(grid, rhs, state, first_cell, rec);

        std::vector<TwoByTwo> mats;
        std::vector<double> scalars;
        mats.reserve(rec.size());
        scalars.reserve(rec.size());
        for (const auto& s : rec) {
            mats.push_back(s[0]);
            scalars.push_back(s[0].sum());
        }
        out.G_matrix.push_back(std::move(mats));
        out.G_scalar.push_back(std::move(scalars));
    }
    return out;
}

double hierarchy_refinement_defect(const EnsembleSpec& ensemble,
                                   const DriveProtocol& protocol, const BathSpec& bath,
                                   const TimeGrid& grid, int n_max) {
    const auto coarse_ek = make_ensemble_kernels(ensemble, protocol, bath, grid);
    const auto fine_ek = make_ensemble_kernels(ensemble, protocol, bath, grid.refined());
    const auto coarse = solve_moment_hierarchy(coarse_ek, n_max);
    const auto fine = solve_moment_hierarchy(fine_ek, n_max);
    double defect = 0.0;
    // coarse boundary b sits at refined boundary 2b
    for (size_t b = 1; b < coarse.times.size(); ++b) {
        const size_t fb = 2 * b;
        if (fb >= fine.times.size()) break;
        for (int n = 1; n <= n_max; ++n) {
            defect = std::max(defect, std::fabs(coarse.moment(n, b) - fine.moment(n, fb)));
        }
    }
    return defect;
}

}  // namespace worktraj
