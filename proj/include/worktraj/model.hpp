#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace worktraj {

// Control schedule E_t >= 0 on [0, tau] with analytic first two derivatives.
// Units: hbar = k_B = 1 throughout.
class DriveProtocol {
  public:
    enum class Kind { Linear, Power, Tanh, Ramp, PiecewiseLinear };

    static DriveProtocol linear(double slope, double tau);
    static DriveProtocol power(double coeff, double exponent, double tau);
    static DriveProtocol tanh_drive(double a, double tau);
    static DriveProtocol ramp(double e_final, double tau);  // E_t = E_f * t / tau
    static DriveProtocol piecewise_linear(std::vector<std::pair<double, double>> knots);

    double energy(double t) const;
    double energy_dot(double t) const;
    double energy_ddot(double t) const;

    double duration() const { return tau_; }
    Kind kind() const { return kind_; }
    const std::vector<std::pair<double, double>>& knots() const { return knots_; }

    // True when energy_dot(0) is unbounded (power laws with exponent < 1);
    // solvers then start one micro-cell in from t = 0.
    bool singular_start() const;
    // Power-law exponent (1 for non-power drives); controls the t -> 0
    // asymptotics solvers use at a singular start.
    double power_exponent() const { return kind_ == Kind::Power ? p_ : 1.0; }

    std::string describe() const;

  private:
    DriveProtocol(Kind k, double tau) : kind_(k), tau_(tau) {}
    void validate() const;

    Kind kind_;
    double tau_ = 0.0;
    double c_ = 0.0;   // slope / coefficient / tanh rate / final energy
    double p_ = 1.0;   // power exponent
    std::vector<std::pair<double, double>> knots_;
};

// Named drive constructors keyed the way the experiment configs spell them.
DriveProtocol builtin_protocol(const std::string& name, const std::vector<double>& params,
                               double tau);

// Thermal bath: inverse temperature plus a coupling law. The gap floor
// regularizes the Bose-Einstein occupation at degenerate gaps under constant
// coupling; every experiment output records the floor in use.
struct BathSpec {
    enum class Coupling { Constant, Ohmic };

    double beta = 1.0;
    Coupling coupling = Coupling::Constant;
    double gamma0 = 0.1;       // constant coupling strength
    double kappa = 0.1;        // Ohmic: gamma_t = kappa * E_t
    double gap_floor = 1e-6;

    static BathSpec constant(double beta, double gamma0, double gap_floor = 1e-6);
    static BathSpec ohmic(double beta, double kappa, double gap_floor = 1e-6);

    void validate() const;
};

// Bose-Einstein occupation at gap E. Constant coupling evaluates at
// max(E, gap_floor); Ohmic leaves the divergence to rates(), where the
// products gamma*nbar stay finite.
double occupation(double E, const BathSpec& bath);

// (emission rate gamma*(nbar+1), absorption rate gamma*nbar); finite for all E >= 0.
std::pair<double, double> rates(double E, const BathSpec& bath);

// Isothermal excited population 1/(e^{beta E} + 1).
double equilibrium_population(double E, double beta);

// Equilibrium free energy change between the protocol's endpoint gaps,
// beta^-1 [ln(1+e^{-beta E0}) - ln(1+e^{-beta Etau})].
double free_energy_change(const DriveProtocol& protocol, double beta);
double free_energy_change_between(double E0, double E1, double beta);
// Same integral by adaptive quadrature of the equilibrium population (cross-check route).
double free_energy_change_quadrature(double E0, double E1, double beta);

// One pure preparation, identified by its excited-state overlap alone.
// The azimuthal Bloch phase never enters the work statistics and is not stored.
struct PurePrep {
    double p_e = 0.0;
    double weight = 1.0;

    double p_g() const { return 1.0 - p_e; }
    void validate() const;
};

// A decomposition of the initial density matrix: either a discrete list of
// pure preparations or a density over p_e in [0,1] reduced to Gauss-Legendre
// quadrature nodes.
class EnsembleSpec {
  public:
    static EnsembleSpec discrete(std::vector<PurePrep> preps, std::string name = "discrete");
    static EnsembleSpec d_eg();
    static EnsembleSpec d_pm();
    static EnsembleSpec d_haar(int quad_nodes = 64);
    static EnsembleSpec polar_pair(double p);
    static EnsembleSpec continuous(std::function<double(double)> density, int quad_nodes,
                                   std::string name = "continuous");

    // Quadrature view: every ensemble reduces to weighted (p_e) atoms.
    const std::vector<PurePrep>& preps() const { return preps_; }
    bool is_continuous() const { return continuous_; }
    const std::string& name() const { return name_; }
    int quad_nodes() const { return quad_nodes_; }

    double mean_excited_population() const;

    // Inverse-CDF sampling of p_e from u in [0,1); discrete ensembles sample by weight.
    double sample_p_e(double u) const;

  private:
    EnsembleSpec() = default;
    void validate() const;

    std::vector<PurePrep> preps_;
    bool continuous_ = false;
    std::string name_;
    int quad_nodes_ = 0;
    // tabulated inverse CDF for generic continuous densities (identity for Haar)
    std::vector<double> inv_cdf_;
};

}  // namespace worktraj
