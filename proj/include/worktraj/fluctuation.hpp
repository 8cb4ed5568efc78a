#pragma once

#include <functional>
#include <string>
#include <vector>

#include "worktraj/kernels.hpp"
#include "worktraj/moments.hpp"

namespace worktraj {

double dissipated_work(double mu1, double delta_F);

// Thermal relaxation time (1 - 2 p_eq)/gamma = 1/(gamma (2 nbar + 1));
// finite beta/(2 kappa) limit at zero gap for Ohmic coupling.
double lambda_relax(double E, const BathSpec& bath);

// Deviation from the Jarzynski equality, xi(t) = 1 - <e^{-beta(W - dF)}>,
// with the Jensen lower bound -beta^{-1} ln(1 - xi) on dissipated work.
struct XiResult {
    std::vector<double> times;
    std::vector<double> xi;
    std::vector<double> xi_dot;
    std::vector<double> bound;
    std::string route;
    bool bound_overflow = false;

    size_t last() const { return times.size() - 1; }
};

// Route 1: solve the matrix MGF at u = beta and peel xi off the ansatz
// G(beta, t) = (1 - xi)(1 + e^{-beta E_t})/2. Requires E(0) = 0 and mean
// excited population 1/2 (equilibrium start at a degenerate gap).
XiResult xi_from_mgf(const EnsembleKernels& ek, const DriveProtocol& protocol,
                     const BathSpec& bath);

// Route 2: integrate xi'' + phi xi' = alpha directly with RK4, phi and alpha
// in closed form over the kernel tables; same preconditions.
XiResult xi_from_ode(const EnsembleKernels& ek, const DriveProtocol& protocol,
                     const BathSpec& bath);

// Formal double-quadrature solution of the same equation, evaluated with the
// exact integrating factor; cross-check for the RK4 route.
std::vector<double> xi_formal_solution(const EnsembleKernels& ek,
                                       const DriveProtocol& protocol, const BathSpec& bath);

std::vector<double> jensen_bound(const XiResult& xi, double beta);

// Work variance by direct quadrature: the classical two-level expression plus
// the coherence reduction double integral, both evaluated with cumulatively
// precomputed inner exponentials (no moment ODE involved).
struct VarianceBreakdown {
    std::vector<double> times;
    std::vector<double> total;      // sigma^2_W(t)
    std::vector<double> classical;  // sigma^2_{W,cl}(t)
    std::vector<double> reduction;  // 2 int int Edot Edot' abar e^{-int gamma(2nbar+1)}
    std::vector<double> mean;       // mu_1(t), quadrature route
};

VarianceBreakdown variance_closed_form(const EnsembleKernels& ek,
                                       const DriveProtocol& protocol, const BathSpec& bath);

// Slow-driving fluctuation-dissipation scan over protocol runtimes. End-time
// rates are evaluated analytically from the hierarchy state (the ODE right
// sides), not by numerical differentiation.
struct FdrRow {
    double tau = 0.0;
    double sigma2_dot = 0.0;
    double wdiss_dot = 0.0;
    double deviation = 0.0;   // sigma2_dot - 2 wdiss_dot / beta
    double prediction = 0.0;  // -2 abar lambda Edot^2
    double lambda = 0.0;
    double abar = 0.0;
    double edot = 0.0;
};
using FdrReport = std::vector<FdrRow>;

FdrReport fdr_scan(const EnsembleSpec& ensemble,
                   const std::function<DriveProtocol(double)>& protocol_family,
                   const BathSpec& bath, const std::vector<double>& tau_list,
                   int base_cells = 600);

// Slow-driving rates of the third and fourth cumulants from the coherence
// sources: a_n = n <g|C_{n-1}|g> lambda Edot.
struct SlowCumulantRates {
    std::vector<double> times;
    std::vector<double> kappa3_rate;
    std::vector<double> kappa4_rate;
};

SlowCumulantRates slow_cumulant_rates(const EnsembleKernels& ek,
                                      const DriveProtocol& protocol, const BathSpec& bath,
                                      const MomentSeries& series);

// Compares -d/dtau ln(1 - xi) against beta^2 abar lambda Edot^2 along a single
// protocol, reporting the convergence ratio per runtime.
struct XiFdrRow {
    double tau = 0.0;
    double lhs = 0.0;  // -d/dtau ln(1 - xi)
    double rhs = 0.0;  // beta^2 abar lambda Edot^2
    double ratio = 0.0;
    bool converged = false;  // |ratio - 1| <= 0.15
};

std::vector<XiFdrRow> xi_cumulant_consistency(const EnsembleKernels& ek,
                                              const DriveProtocol& protocol,
                                              const BathSpec& bath,
                                              const std::vector<double>& tau_list);

// Grid options suited to xi solves (adds the |phi| * h cap).
GridOptions xi_grid_options(const BathSpec& bath, int base_cells = 1600);

}  // namespace worktraj
