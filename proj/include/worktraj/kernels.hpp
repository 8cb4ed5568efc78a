#pragma once

#include <vector>

#include "worktraj/model.hpp"
#include "worktraj/time_grid.hpp"
#include "worktraj/twobytwo.hpp"

namespace worktraj {

// Survival kernels and rates tabulated on a grid's fine nodes.
// lam_down/lam_up are the cumulative rate integrals; k_e = exp(-lam_down),
// k_g = exp(-lam_up). Node values come from adaptive quadrature of the
// closed-form rate laws, so they are grid-independent to ~1e-12.
struct KernelTable {
    TimeGrid grid;
    std::vector<double> energy;
    std::vector<double> edot;       // 0 at a singular start node
    std::vector<double> rate_down;  // gamma (nbar + 1)
    std::vector<double> rate_up;    // gamma nbar
    std::vector<double> lam_down;
    std::vector<double> lam_up;
    std::vector<double> k_e;
    std::vector<double> k_g;
    // Simpson-consistent stage values for RK4 right-hand sides: midpoint entries
    // are adjusted so each cell's implicit coefficient quadrature integrates the
    // exact Delta-Lambda / Delta-E, removing secular drift on graded cells.
    std::vector<double> rate_down_stage;
    std::vector<double> rate_up_stage;
    std::vector<double> edot_stage;

    double K_e(double t) const { return grid.interpolate(k_e, t); }
    double K_g(double t) const { return grid.interpolate(k_g, t); }
};

KernelTable make_kernel_table(const DriveProtocol& protocol, const BathSpec& bath,
                              const TimeGrid& grid);

// Per-preparation null-segment quantities on the same fine nodes.
struct PrepKernel {
    double p_e = 0.0;
    double weight = 0.0;
    std::vector<double> pe_null;  // p_e K_e / P_null, clipped to [0, 1]
    std::vector<double> w_null;   // cumulative operational work before the first jump
    std::vector<double> p_null;   // survival probability p_e K_e + p_g K_g
    std::vector<double> a;        // coherence weight p_g p_e K_g K_e / P_null
};

PrepKernel make_prep_kernel(const PurePrep& prep, const KernelTable& kt,
                            const DriveProtocol& protocol);

// All preparations of an ensemble over one kernel table.
struct EnsembleKernels {
    KernelTable kt;
    std::vector<PrepKernel> preps;

    // I_m(t) = sum_i w_i W_null,i(t)^m a_i(t) at every fine node (m >= 0).
    std::vector<double> moment_integral(int m) const;
    // J_u(t) = sum_i w_i exp(-u W_null,i(t)) a_i(t) at every fine node.
    std::vector<double> exp_integral(double u) const;
};

EnsembleKernels make_ensemble_kernels(const EnsembleSpec& ensemble,
                                      const DriveProtocol& protocol, const BathSpec& bath,
                                      const TimeGrid& grid);

// Spec-level operations (interpolating views over the tables).
double null_work(const PrepKernel& pk, const TimeGrid& grid, double t);
double null_probability(const PrepKernel& pk, const TimeGrid& grid, double t);
double coherence_weight(const PrepKernel& pk, const TimeGrid& grid, double t);
double ensemble_coherence_weight(const EnsembleKernels& ek, double t);

// C_n(t): diagonal, <g|C_n|g> = -<e|C_n|e> = n Edot(t) * I_{n-1}(t).
TwoByTwo coherence_source_moment(const EnsembleKernels& ek, const DriveProtocol& protocol,
                                 double t, int n);

// C_null(u, t) through the coherence-weight identity
// <e|C_null|e> = u Edot(t) J_u(t); entries sum to zero by construction.
TwoByTwo coherence_source_mgf(const EnsembleKernels& ek, const DriveProtocol& protocol,
                              double u, double t);

// Literal transcription of the defining integrand (work-tilted product with
// P_null); numerically fragile at late times, kept as a cross-check oracle.
TwoByTwo coherence_source_mgf_direct(const EnsembleKernels& ek,
                                     const DriveProtocol& protocol, double u, double t);

// Resolution diagnostic: rebuilds on a once-refined grid and reports the
// largest change in K_e, K_g and the ensemble's W_null tables.
struct KernelResolutionReport {
    double max_kernel_change = 0.0;
    double max_w_null_change = 0.0;
    bool ok(double tol = 1e-6) const {
        return max_kernel_change <= tol && max_w_null_change <= tol;
    }
};

KernelResolutionReport check_kernel_resolution(const EnsembleSpec& ensemble,
                                               const DriveProtocol& protocol,
                                               const BathSpec& bath, const TimeGrid& grid);

}  // namespace worktraj
