#include "worktraj/fluctuation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "worktraj/quadrature.hpp"

namespace worktraj {

double dissipated_work(double mu1, double delta_F) { return mu1 - delta_F; }

double lambda_relax(double E, const BathSpec& bath) {
    if (E < 0.0) throw std::invalid_argument("lambda_relax: E must be nonnegative");
    if (bath.coupling == BathSpec::Coupling::Constant) {
        return std::tanh(0.5 * bath.beta * E) / bath.gamma0;
    }
    const double x = 0.5 * bath.beta * E;
    if (x < 1e-5) {
        // tanh(x)/x -> 1 - x^2/3
        return (0.5 * bath.beta / bath.kappa) * (1.0 - x * x / 3.0);
    }
    return std::tanh(x) / (bath.kappa * E);
}

namespace {

constexpr double kXiNegativeTol = -1e-8;

double log_cosh(double x) {
    const double ax = std::fabs(x);
    return ax + std::log1p(std::exp(-2.0 * ax)) - std::log(2.0);
}

enum class Measure { Time, Drive, RateUp };

const std::vector<double>& measure_axis(const KernelTable& kt, Measure m) {
    switch (m) {
        case Measure::Time: return kt.grid.t;
        case Measure::Drive: return kt.energy;
        case Measure::RateUp: return kt.lam_up;
    }
    return kt.grid.t;
}

// Y at every fine node with Y(t) = int_0^t e^{S(t') - S(t)} f(t') dx(t'),
// updated half-cell by half-cell so all exponentials stay O(1). S may be
// null (undamped). Falls back to the time measure with an explicit Edot
// factor on cells where the drive is not monotone.
std::vector<double> damped_cumulative(const KernelTable& kt, const std::vector<double>* S,
                                      const std::vector<double>& f, Measure m) {
    const auto& t = kt.grid.t;
    const size_t n = t.size();
    const auto& x = measure_axis(kt, m);
    std::vector<double> y(n, 0.0);
    for (size_t j = 1; j < n; ++j) {
        const size_t c = (j - 1) / 2;
        const size_t j0 = 2 * c, j1 = 2 * c + 1, j2 = 2 * c + 2;
        double g0, g1, g2;
        auto gval = [&](size_t i) {
            const double damp = S ? std::exp((*S)[i] - (*S)[j]) : 1.0;
            return f[i] * damp;
        };
        bool use_axis = true;
        if (m == Measure::Drive) {
            const double dA = x[j1] - x[j0], dB = x[j2] - x[j1];
            use_axis = (dA >= 0.0 && dB >= 0.0) || (dA <= 0.0 && dB <= 0.0);
        }
        double inc;
        if (use_axis) {
            g0 = gval(j0);
            g1 = gval(j1);
            g2 = gval(j2);
            inc = quadratic_segment_integral_partial(x[j0], x[j1], x[j2], g0, g1, g2,
                                                     x[j - 1], x[j]);
        } else {
            g0 = gval(j0) * kt.edot[j0];
            g1 = gval(j1) * kt.edot[j1];
            g2 = gval(j2) * kt.edot[j2];
            inc = quadratic_segment_integral_partial(t[j0], t[j1], t[j2], g0, g1, g2,
                                                     t[j - 1], t[j]);
        }
        const double carry = S ? std::exp((*S)[j - 1] - (*S)[j]) : 1.0;
        y[j] = y[j - 1] * carry + inc;
    }
    return y;
}

double mean_p_e(const EnsembleKernels& ek) {
    double p = 0.0;
    for (const auto& pk : ek.preps) p += pk.weight * pk.p_e;
    return p;
}

void require_equilibrium_start(const EnsembleKernels& ek, const DriveProtocol& protocol) {
    if (std::fabs(protocol.energy(0.0)) > 1e-9)
        throw std::invalid_argument("xi: requires a degenerate initial gap E(0) = 0");
    if (std::fabs(mean_p_e(ek) - 0.5) > 1e-9)
        throw std::invalid_argument("xi: requires mean excited population 1/2");
}

void finish_xi(XiResult& r, double beta) {
    r.bound.resize(r.xi.size());
    for (size_t i = 0; i < r.xi.size(); ++i) {
        double& v = r.xi[i];
        if (v < kXiNegativeTol)
            throw std::runtime_error("xi: negative beyond tolerance at t = " +
                                     std::to_string(r.times[i]));
        if (v >= 1.0)
            throw std::runtime_error("xi: reached 1 at t = " + std::to_string(r.times[i]));
        if (v < 0.0) v = 0.0;
        if (v > 1.0 - 1e-15) {
            r.bound[i] = -std::log(1e-15) / beta;
            r.bound_overflow = true;
        } else {
            r.bound[i] = -std::log1p(-v) / beta;
        }
    }
}

// Damping of the scaled deviation rate chi = xi_dot / Edot. The xi equation
// xi'' + phi xi' = alpha, phi = beta Edot tanh(beta E/2) + gamma (2 nbar + 1)
// - Eddot/Edot, is integrated in the chi variable: chi' = alpha/Edot - phi0 chi
// with phi0 below. chi is continuous across drive kinks (xi_dot itself scales
// with the slope) and the formulation has no removable Edot -> 0 singularity.
double phi0_at(const KernelTable& kt, const BathSpec& bath, size_t j) {
    return bath.beta * kt.edot_stage[j] * std::tanh(0.5 * bath.beta * kt.energy[j]) +
           kt.rate_down_stage[j] + kt.rate_up_stage[j];
}

}  // namespace

XiResult xi_from_mgf(const EnsembleKernels& ek, const DriveProtocol& protocol,
                     const BathSpec& bath) {
    require_equilibrium_start(ek, protocol);
    const double beta = bath.beta;
    const auto mgf = solve_mgf(ek, {beta});
    XiResult r;
    r.route = "mgf-ansatz";
    r.times = mgf.times;
    r.xi.resize(r.times.size());
    r.xi_dot.resize(r.times.size());
    for (size_t b = 0; b < r.times.size(); ++b) {
        const double E = protocol.energy(r.times[b]);
        const double h2 = 1.0 + std::exp(-beta * E);
        const double G = mgf.G_scalar[0][b];
        r.xi[b] = 1.0 - 2.0 * G / h2;
        double ed = protocol.energy_dot(r.times[b]);
        if (!std::isfinite(ed)) ed = 0.0;
        const double g_row = mgf.G_matrix[0][b].row_e_sum();
        r.xi_dot[b] = (2.0 * beta * ed / h2) * (g_row - G * std::exp(-beta * E) / h2);
    }
    finish_xi(r, beta);
    return r;
}

XiResult xi_from_ode(const EnsembleKernels& ek, const DriveProtocol& protocol,
                     const BathSpec& bath) {
    require_equilibrium_start(ek, protocol);
    const double beta = bath.beta;
    const auto& kt = ek.kt;
    const auto& grid = kt.grid;
    const size_t n = grid.t.size();

    const auto J = ek.exp_integral(beta);
    std::vector<double> phi0(n), alpha_over_edot(n);
    for (size_t j = 0; j < n; ++j) {
        phi0[j] = phi0_at(kt, bath, j);
        alpha_over_edot[j] = 2.0 * beta * beta * kt.edot_stage[j] * J[j] /
                             (1.0 + std::exp(-beta * kt.energy[j]));
    }

    XiResult r;
    r.route = "phi-alpha-ode";
    double xi = 0.0, chi = 0.0;
    r.times.push_back(grid.t.front());
    r.xi.push_back(0.0);
    r.xi_dot.push_back(0.0);
    size_t first_cell = 0;
    if (grid.singular_start) {
        // local balance for E ~ c t^p near t = 0: chi = (alpha/Edot) t / p
        const double pexp = protocol.power_exponent();
        const double h0 = grid.t[2];
        chi = alpha_over_edot[2] * h0 / pexp;
        xi = chi * kt.edot[2] * h0 / (2.0 * pexp);
        r.times.push_back(h0);
        r.xi.push_back(xi);
        r.xi_dot.push_back(chi * kt.edot[2]);
        first_cell = 1;
    }
    for (size_t c = first_cell; c < grid.cells(); ++c) {
        const size_t j0 = 2 * c, j1 = 2 * c + 1, j2 = 2 * c + 2;
        const double h = grid.t[j2] - grid.t[j0];
        auto f = [&](size_t j, double x) {
            return std::pair<double, double>{x * kt.edot_stage[j],
                                             alpha_over_edot[j] - phi0[j] * x};
        };
        const auto [k1x, k1p] = f(j0, chi);
        const auto [k2x, k2p] = f(j1, chi + 0.5 * h * k1p);
        const auto [k3x, k3p] = f(j1, chi + 0.5 * h * k2p);
        const auto [k4x, k4p] = f(j2, chi + h * k3p);
        xi += (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        chi += (h / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        r.times.push_back(grid.t[j2]);
        r.xi.push_back(xi);
        r.xi_dot.push_back(chi * kt.edot[j2]);
    }
    finish_xi(r, beta);
    return r;
}

std::vector<double> xi_formal_solution(const EnsembleKernels& ek,
                                       const DriveProtocol& protocol, const BathSpec& bath) {
    require_equilibrium_start(ek, protocol);
    const double beta = bath.beta;
    const auto& kt = ek.kt;
    const auto& grid = kt.grid;
    const size_t n = grid.t.size();
    const size_t j_start = grid.singular_start ? 2 : 0;

    const auto J = ek.exp_integral(beta);
    // chi(t) = int_0^t e^{Phi0(t') - Phi0(t)} (alpha/Edot)(t') dt' with the exact
    // integrating factor Phi0 = 2 ln cosh(beta E / 2) + Lam_d + Lam_u.
    std::vector<double> phi_rel(n, 0.0);
    for (size_t j = 0; j < n; ++j) {
        phi_rel[j] = 2.0 * log_cosh(0.5 * beta * kt.energy[j]) + kt.lam_down[j] +
                     kt.lam_up[j];
    }

    std::vector<double> chi(n, 0.0);
    if (grid.singular_start) {
        const double a2 = 2.0 * beta * beta * kt.edot[2] * J[2] /
                          (1.0 + std::exp(-beta * kt.energy[2]));
        chi[2] = a2 * grid.t[2] / protocol.power_exponent();
    }
    for (size_t j = 1; j < n; ++j) {
        if (j <= j_start) continue;  // micro start cell carries the asymptotic value
        const size_t c = (j - 1) / 2;
        const size_t j0 = 2 * c, j1 = 2 * c + 1, j2 = 2 * c + 2;
        auto gval = [&](size_t i) {
            const double dphi = phi_rel[i] - phi_rel[j];
            const double damp = std::exp(std::min(dphi, 50.0));
            return damp * 2.0 * beta * beta * kt.edot[i] * J[i] /
                   (1.0 + std::exp(-beta * kt.energy[i]));
        };
        const double inc = quadratic_segment_integral_partial(
            grid.t[j0], grid.t[j1], grid.t[j2], gval(j0), gval(j1), gval(j2),
            grid.t[j - 1], grid.t[j]);
        chi[j] = chi[j - 1] * std::exp(phi_rel[j - 1] - phi_rel[j]) + inc;
    }

    // xi = int chi dE, integrated in the energy variable per half-cell
    std::vector<double> xi_fine(n, 0.0);
    for (size_t j = 1; j < n; ++j) {
        const size_t c = (j - 1) / 2;
        const size_t j0 = 2 * c, j1 = 2 * c + 1, j2 = 2 * c + 2;
        const double dA = kt.energy[j1] - kt.energy[j0];
        const double dB = kt.energy[j2] - kt.energy[j1];
        double inc;
        if ((dA >= 0.0 && dB >= 0.0) || (dA <= 0.0 && dB <= 0.0)) {
            inc = quadratic_segment_integral_partial(kt.energy[j0], kt.energy[j1],
                                                     kt.energy[j2], chi[j0], chi[j1],
                                                     chi[j2], kt.energy[j - 1],
                                                     kt.energy[j]);
        } else {
            inc = quadratic_segment_integral_partial(
                grid.t[j0], grid.t[j1], grid.t[j2], chi[j0] * kt.edot[j0],
                chi[j1] * kt.edot[j1], chi[j2] * kt.edot[j2], grid.t[j - 1], grid.t[j]);
        }
        xi_fine[j] = xi_fine[j - 1] + inc;
    }

    std::vector<double> out;
    out.reserve(grid.boundaries());
    for (size_t b = 0; b < grid.boundaries(); ++b) out.push_back(xi_fine[2 * b]);
    return out;
}

std::vector<double> jensen_bound(const XiResult& xi, double beta) {
    std::vector<double> b(xi.xi.size());
    for (size_t i = 0; i < xi.xi.size(); ++i) {
        if (xi.xi[i] >= 1.0) throw std::runtime_error("jensen_bound: xi >= 1 is undefined");
        b[i] = -std::log1p(-xi.xi[i]) / beta;
    }
    return b;
}

VarianceBreakdown variance_closed_form(const EnsembleKernels& ek,
                                       const DriveProtocol& protocol, const BathSpec& bath) {
    (void)protocol;
    (void)bath;
    const auto& kt = ek.kt;
    const size_t n = kt.grid.t.size();
    const double pbar = mean_p_e(ek);

    std::vector<double> sigma(n);  // Lam_d + Lam_u, the relaxation exponent
    for (size_t j = 0; j < n; ++j) sigma[j] = kt.lam_down[j] + kt.lam_up[j];

    // p_e(t) = pbar e^{-Sigma} + int e^{Sigma' - Sigma} dLam_u'
    std::vector<double> ones(n, 1.0);
    std::vector<double> pe = damped_cumulative(kt, &sigma, ones, Measure::RateUp);
    for (size_t j = 0; j < n; ++j) pe[j] += pbar * std::exp(-sigma[j]);

    const auto mu1 = damped_cumulative(kt, nullptr, pe, Measure::Drive);

    // y(t) solves y' = -gamma(2nbar+1) y + gamma nbar mu1 + Edot p_e.
    auto y_rate = damped_cumulative(kt, &sigma, mu1, Measure::RateUp);
    const auto y_drive = damped_cumulative(kt, &sigma, pe, Measure::Drive);
    for (size_t j = 0; j < n; ++j) y_rate[j] += y_drive[j];

    const auto outer = damped_cumulative(kt, nullptr, y_rate, Measure::Drive);

    const auto abar = ek.moment_integral(0);
    const auto yc = damped_cumulative(kt, &sigma, abar, Measure::Drive);
    const auto outer_c = damped_cumulative(kt, nullptr, yc, Measure::Drive);

    VarianceBreakdown vb;
    const size_t B = kt.grid.boundaries();
    vb.times.resize(B);
    vb.total.resize(B);
    vb.classical.resize(B);
    vb.reduction.resize(B);
    vb.mean.resize(B);
    for (size_t b = 0; b < B; ++b) {
        const size_t j = 2 * b;
        vb.times[b] = kt.grid.t[j];
        vb.mean[b] = mu1[j];
        vb.classical[b] = 2.0 * outer[j] - mu1[j] * mu1[j];
        vb.reduction[b] = 2.0 * outer_c[j];
        vb.total[b] = vb.classical[b] - vb.reduction[b];
    }
    return vb;
}

FdrReport fdr_scan(const EnsembleSpec& ensemble,
                   const std::function<DriveProtocol(double)>& protocol_family,
                   const BathSpec& bath, const std::vector<double>& tau_list,
                   int base_cells) {
    FdrReport report;
    report.reserve(tau_list.size());
    for (double tau : tau_list) {
        const DriveProtocol protocol = protocol_family(tau);
        GridOptions gopts;
        gopts.base_cells = base_cells;
        gopts.u_ref = bath.beta;
        const TimeGrid grid = make_time_grid(protocol, bath, tau, gopts);
        const auto ek = make_ensemble_kernels(ensemble, protocol, bath, grid);
        const auto series = solve_moment_hierarchy(ek, 2);
        const size_t B = series.last();

        FdrRow row;
        row.tau = tau;
        row.edot = protocol.energy_dot(tau);
        const double E_end = protocol.energy(tau);
        const double mu1 = series.moment(1, B);
        const double pe = series.excited_population(B);
        const double y = series.g1_row_e(B);
        // Exact end-time rates from the ODE right sides:
        // d<W^2>/dt = 2 Edot (e-row of G1), d<W>/dt = Edot p_e.
        row.sigma2_dot = 2.0 * row.edot * y - 2.0 * mu1 * row.edot * pe;
        row.wdiss_dot = row.edot * (pe - equilibrium_population(E_end, bath.beta));
        row.deviation = row.sigma2_dot - 2.0 * row.wdiss_dot / bath.beta;
        row.lambda = lambda_relax(E_end, bath);
        row.abar = ek.moment_integral(0).back();
        row.prediction = -2.0 * row.abar * row.lambda * row.edot * row.edot;
        report.push_back(row);
    }
    return report;
}

SlowCumulantRates slow_cumulant_rates(const EnsembleKernels& ek,
                                      const DriveProtocol& protocol, const BathSpec& bath,
                                      const MomentSeries& series) {
    if (series.n_max < 2)
        throw std::invalid_argument("slow_cumulant_rates: needs moments up to order 2");
    const auto I0 = ek.moment_integral(0);
    const auto I1 = ek.moment_integral(1);
    const auto I2 = ek.moment_integral(2);

    SlowCumulantRates out;
    const size_t B = series.times.size();
    out.times = series.times;
    out.kappa3_rate.resize(B);
    out.kappa4_rate.resize(B);
    for (size_t b = 0; b < B; ++b) {
        const size_t j = 2 * b;
        const double ed = ek.kt.edot[j];
        const double lam = lambda_relax(ek.kt.energy[j], bath);
        const double led2 = lam * ed * ed;
        // a_n = n <g|C_{n-1}|g> lambda Edot = n (n-1) lambda Edot^2 I_{n-2}
        const double a2 = 2.0 * led2 * I0[j];
        const double a3 = 6.0 * led2 * I1[j];
        const double a4 = 12.0 * led2 * I2[j];
        const double m1 = series.moment(1, b);
        const double m2 = series.moment(2, b);
        out.kappa3_rate[b] = 3.0 * m1 * a2 - a3;
        out.kappa4_rate[b] = 6.0 * m2 * a2 - a4 - 12.0 * m1 * m1 * a2 + 4.0 * m1 * a3;
    }
    (void)protocol;
    return out;
}

std::vector<XiFdrRow> xi_cumulant_consistency(const EnsembleKernels& ek,
                                              const DriveProtocol& protocol,
                                              const BathSpec& bath,
                                              const std::vector<double>& tau_list) {
    const auto xi = xi_from_ode(ek, protocol, bath);
    const auto abar = ek.moment_integral(0);
    std::vector<XiFdrRow> rows;
    rows.reserve(tau_list.size());
    for (double tau : tau_list) {
        // nearest recorded boundary
        const auto it = std::lower_bound(xi.times.begin(), xi.times.end(), tau);
        size_t b = static_cast<size_t>(std::distance(xi.times.begin(), it));
        if (b >= xi.times.size()) b = xi.times.size() - 1;
        XiFdrRow row;
        row.tau = xi.times[b];
        row.lhs = xi.xi_dot[b] / (1.0 - xi.xi[b]);
        const double ed = protocol.energy_dot(row.tau);
        const double a = ek.kt.grid.interpolate(abar, row.tau);
        row.rhs = bath.beta * bath.beta * a * lambda_relax(protocol.energy(row.tau), bath) *
                  ed * ed;
        if (std::fabs(row.lhs) < 1e-290 && std::fabs(row.rhs) < 1e-290) {
            row.ratio = 1.0;
        } else {
            row.ratio = row.lhs / row.rhs;
        }
        row.converged = std::fabs(row.ratio - 1.0) <= 0.15;
        rows.push_back(row);
    }
    return rows;
}

GridOptions xi_grid_options(const BathSpec& bath, int base_cells) {
    GridOptions g;
    g.base_cells = base_cells;
    g.u_ref = std::max(1.0, bath.beta);
    g.phi_cap = 0.4;
    g.beta = bath.beta;
    return g;
}

}  // namespace worktraj
