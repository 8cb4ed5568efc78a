#pragma once

#include <vector>

#include "worktraj/kernels.hpp"
#include "worktraj/twobytwo.hpp"

namespace worktraj {

// Work-moment matrices G_0..G_n_max on the grid's cell boundaries, from the
// hierarchical matrix ODE dG_n/dt = -R G_n + n Hdot G_{n-1} + C_n integrated
// with classic fixed-step RK4 (stage times coincide with stored fine nodes).
struct MomentSeries {
    std::vector<double> times;             // cell boundaries
    int n_max = 0;
    std::vector<std::vector<TwoByTwo>> G;  // [boundary][order]

    double moment(int n, size_t b) const { return G[b][static_cast<size_t>(n)].sum(); }
    double excited_population(size_t b) const { return G[b][0].row_e_sum(); }
    // e-row sum of G_1; the exact variance rate reads 2 Edot(t) * this.
    double g1_row_e(size_t b) const { return G[b][1].row_e_sum(); }

    std::vector<double> moments_at(size_t b) const;    // mu_1..mu_n_max
    std::vector<double> cumulants_at(size_t b) const;  // kappa_1..kappa_min(n_max,4)
    double variance(size_t b) const;
    size_t last() const { return times.size() - 1; }
};

struct MgfSeries {
    std::vector<double> times;
    std::vector<double> u_values;
    std::vector<std::vector<TwoByTwo>> G_matrix;  // [u][boundary]
    std::vector<std::vector<double>> G_scalar;    // [u][boundary], sum of entries
};

MomentSeries solve_moment_hierarchy(const EnsembleKernels& ek, int n_max);

MgfSeries solve_mgf(const EnsembleKernels& ek, const std::vector<double>& u_list);

// Step-halving resolution diagnostic: largest change of any mu_n(boundary)
// when every grid cell is split in two. Callers treat > 1e-6 as "grid too coarse".
double hierarchy_refinement_defect(const EnsembleSpec& ensemble,
                                   const DriveProtocol& protocol, const BathSpec& bath,
                                   const TimeGrid& grid, int n_max);

}  // namespace worktraj
