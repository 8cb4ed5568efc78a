#include "worktraj/model.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

#include "worktraj/quadrature.hpp"

namespace worktraj {

namespace {
constexpr double kTiny = 1e-300;
}

// ---------------------------------------------------------------------------
// DriveProtocol

DriveProtocol DriveProtocol::linear(double slope, double tau) {
    DriveProtocol p(Kind::Linear, tau);
    p.c_ = slope;
    p.validate();
    return p;
}

DriveProtocol DriveProtocol::power(double coeff, double exponent, double tau) {
    DriveProtocol p(Kind::Power, tau);
    p.c_ = coeff;
    p.p_ = exponent;
    if (exponent <= 0.0) throw std::invalid_argument("power protocol: exponent must be > 0");
    p.validate();
    return p;
}

DriveProtocol DriveProtocol::tanh_drive(double a, double tau) {
    DriveProtocol p(Kind::Tanh, tau);
    p.c_ = a;
    p.validate();
    return p;
}

DriveProtocol DriveProtocol::ramp(double e_final, double tau) {
    DriveProtocol p(Kind::Ramp, tau);
    p.c_ = e_final;
    p.validate();
    return p;
}

DriveProtocol DriveProtocol::piecewise_linear(std::vector<std::pair<double, double>> knots) {
    if (knots.size() < 2)
        throw std::invalid_argument("piecewise protocol: need at least two knots");
    for (size_t i = 1; i < knots.size(); ++i) {
        if (!(knots[i].first > knots[i - 1].first))
            throw std::invalid_argument("piecewise protocol: knot times must increase");
    }
    if (knots.front().first != 0.0)
        throw std::invalid_argument("piecewise protocol: first knot must be at t = 0");
    DriveProtocol p(Kind::PiecewiseLinear, knots.back().first);
    p.knots_ = std::move(knots);
    p.validate();
    return p;
}

void DriveProtocol::validate() const {
    if (!(tau_ > 0.0)) throw std::invalid_argument("protocol: duration must be positive");
    const int samples = 101;
    for (int i = 0; i <= samples; ++i) {
        const double t = tau_ * i / samples;
        if (energy(t) < -1e-12)
            throw std::invalid_argument("protocol: E(t) must be nonnegative on [0, tau]");
    }
}

double DriveProtocol::energy(double t) const {
    switch (kind_) {
        case Kind::Linear: return c_ * t;
        case Kind::Power: return c_ * std::pow(t, p_);
        case Kind::Tanh: return std::tanh(c_ * t);
        case Kind::Ramp: return c_ * t / tau_;
        case Kind::PiecewiseLinear: {
            if (t <= knots_.front().first) return knots_.front().second;
            if (t >= knots_.back().first) return knots_.back().second;
            auto it = std::upper_bound(
                knots_.begin(), knots_.end(), t,
                [](double v, const std::pair<double, double>& k) { return v < k.first; });
            const auto& hi = *it;
            const auto& lo = *(it - 1);
            const double w = (t - lo.first) / (hi.first - lo.first);
            return lo.second + w * (hi.second - lo.second);
        }
    }
    return 0.0;
}

double DriveProtocol::energy_dot(double t) const {
    switch (kind_) {
        case Kind::Linear: return c_;
        case Kind::Power:
            if (t == 0.0) {
                if (p_ == 1.0) return c_;
                return p_ > 1.0 ? 0.0 : std::numeric_limits<double>::infinity() *
                                            (c_ >= 0 ? 1.0 : -1.0);
            }
            return c_ * p_ * std::pow(t, p_ - 1.0);
        case Kind::Tanh: {
            const double ch = std::cosh(c_ * t);
            return c_ / (ch * ch);
        }
        case Kind::Ramp: return c_ / tau_;
        case Kind::PiecewiseLinear: {
            if (t >= knots_.back().first) {
                const auto& a = knots_[knots_.size() - 2];
                const auto& b = knots_.back();
                return (b.second - a.second) / (b.first - a.first);
            }
            auto it = std::upper_bound(
                knots_.begin(), knots_.end(), t,
                [](double v, const std::pair<double, double>& k) { return v < k.first; });
            if (it == knots_.begin()) ++it;
            const auto& hi = *it;
            const auto& lo = *(it - 1);
            return (hi.second - lo.second) / (hi.first - lo.first);
        }
    }
    return 0.0;
}

double DriveProtocol::energy_ddot(double t) const {
    switch (kind_) {
        case Kind::Linear:
        case Kind::Ramp:
        case Kind::PiecewiseLinear: return 0.0;
        case Kind::Power:
            if (t == 0.0) {
                if (p_ == 1.0 || p_ == 2.0) return (p_ == 2.0) ? 2.0 * c_ : 0.0;
                return p_ > 2.0 ? 0.0 : std::numeric_limits<double>::infinity() *
                                            (c_ * (p_ - 1.0) >= 0 ? 1.0 : -1.0);
            }
            return c_ * p_ * (p_ - 1.0) * std::pow(t, p_ - 2.0);
        case Kind::Tanh: {
            const double th = std::tanh(c_ * t);
            const double ch = std::cosh(c_ * t);
            return -2.0 * c_ * c_ * th / (ch * ch);
        }
    }
    return 0.0;
}

bool DriveProtocol::singular_start() const {
    return kind_ == Kind::Power && p_ < 1.0;
}

std::string DriveProtocol::describe() const {
    std::ostringstream os;
    switch (kind_) {
        case Kind::Linear: os << "linear(" << c_ << ")"; break;
        case Kind::Power: os << "power(" << c_ << "," << p_ << ")"; break;
        case Kind::Tanh: os << "tanh(" << c_ << ")"; break;
        case Kind::Ramp: os << "ramp(" << c_ << ")"; break;
        case Kind::PiecewiseLinear: os << "piecewise[" << knots_.size() << " knots]"; break;
    }
    os << ", tau=" << tau_;
    return os.str();
}

DriveProtocol builtin_protocol(const std::string& name, const std::vector<double>& params,
                               double tau) {
    auto need = [&](size_t n) {
        if (params.size() != n)
            throw std::invalid_argument("builtin_protocol '" + name + "': expected " +
                                        std::to_string(n) + " parameter(s)");
    };
    if (name == "linear") {
        need(1);
        return DriveProtocol::linear(params[0], tau);
    }
    if (name == "power") {
        need(2);
        return DriveProtocol::power(params[0], params[1], tau);
    }
    if (name == "tanh") {
        need(1);
        return DriveProtocol::tanh_drive(params[0], tau);
    }
    if (name == "ramp") {
        need(1);
        return DriveProtocol::ramp(params[0], tau);
    }
    throw std::invalid_argument("builtin_protocol: unknown protocol name '" + name + "'");
}

// ---------------------------------------------------------------------------
// BathSpec and elementary thermodynamics

BathSpec BathSpec::constant(double beta, double gamma0, double gap_floor) {
    BathSpec b;
    b.beta = beta;
    b.coupling = Coupling::Constant;
    b.gamma0 = gamma0;
    b.gap_floor = gap_floor;
    b.validate();
    return b;
}

BathSpec BathSpec::ohmic(double beta, double kappa, double gap_floor) {
    BathSpec b;
    b.beta = beta;
    b.coupling = Coupling::Ohmic;
    b.kappa = kappa;
    b.gap_floor = gap_floor;
    b.validate();
    return b;
}

void BathSpec::validate() const {
    if (!(beta > 0.0)) throw std::invalid_argument("bath: beta must be positive");
    if (coupling == Coupling::Constant && !(gamma0 > 0.0))
        throw std::invalid_argument("bath: gamma0 must be positive");
    if (coupling == Coupling::Ohmic && !(kappa > 0.0))
        throw std::invalid_argument("bath: kappa must be positive");
    if (!(gap_floor > 0.0)) throw std::invalid_argument("bath: gap_floor must be positive");
}

double occupation(double E, const BathSpec& bath) {
    if (E < 0.0) throw std::invalid_argument("occupation: E must be nonnegative");
    if (bath.coupling == BathSpec::Coupling::Constant) {
        const double Eef = std::max(E, bath.gap_floor);
        return 1.0 / std::expm1(bath.beta * Eef);
    }
    return 1.0 / std::expm1(bath.beta * E);  // may be inf at E = 0; rates() takes the joint limit
}

std::pair<double, double> rates(double E, const BathSpec& bath) {
    if (E < 0.0) throw std::invalid_argument("rates: E must be nonnegative");
    if (bath.coupling == BathSpec::Coupling::Constant) {
        const double nbar = occupation(E, bath);
        return {bath.gamma0 * (nbar + 1.0), bath.gamma0 * nbar};
    }
    // Ohmic: gamma = kappa E, so gamma*nbar = kappa E / expm1(beta E) -> kappa/beta.
    const double x = bath.beta * E;
    double up;
    if (x < 1e-5) {
        up = (bath.kappa / bath.beta) * (1.0 - 0.5 * x + x * x / 12.0);
    } else {
        up = bath.kappa * E / std::expm1(x);
    }
    return {up + bath.kappa * E, up};
}

double equilibrium_population(double E, double beta) {
    if (E < 0.0) throw std::invalid_argument("equilibrium_population: E must be nonnegative");
    return 1.0 / (std::exp(beta * E) + 1.0);
}

double free_energy_change_between(double E0, double E1, double beta) {
    auto soft = [&](double E) { return std::log1p(std::exp(-beta * E)); };
    return (soft(E0) - soft(E1)) / beta;
}

double free_energy_change(const DriveProtocol& protocol, double beta) {
    return free_energy_change_between(protocol.energy(0.0),
                                      protocol.energy(protocol.duration()), beta);
}

double free_energy_change_quadrature(double E0, double E1, double beta) {
    return adaptive_simpson([&](double E) { return equilibrium_population(E, beta); }, E0,
                            E1, 1e-13);
}

// ---------------------------------------------------------------------------
// Preparations and ensembles

void PurePrep::validate() const {
    if (!(p_e >= 0.0 && p_e <= 1.0))
        throw std::invalid_argument("prep: p_e must lie in [0, 1]");
    if (!(weight >= 0.0)) throw std::invalid_argument("prep: weight must be nonnegative");
}

EnsembleSpec EnsembleSpec::discrete(std::vector<PurePrep> preps, std::string name) {
    EnsembleSpec e;
    e.preps_ = std::move(preps);
    e.name_ = std::move(name);
    e.validate();
    return e;
}

EnsembleSpec EnsembleSpec::d_eg() {
    return discrete({{1.0, 0.5}, {0.0, 0.5}}, "d_eg");
}

EnsembleSpec EnsembleSpec::d_pm() {
    // |+> and |-> both have excited overlap 1/2; kept as two members to mirror
    // the decomposition it represents.
    return discrete({{0.5, 0.5}, {0.5, 0.5}}, "d_pm");
}

EnsembleSpec EnsembleSpec::polar_pair(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("polar_pair: p in [0,1]");
    return discrete({{p, 0.5}, {1.0 - p, 0.5}}, "polar_pair");
}

EnsembleSpec EnsembleSpec::d_haar(int quad_nodes) {
    // Uniform pure states on the Bloch sphere induce p_e uniform on [0, 1].
    EnsembleSpec e = continuous([](double) { return 1.0; }, quad_nodes, "d_haar");
    e.inv_cdf_.clear();  // identity inverse CDF
    return e;
}

EnsembleSpec EnsembleSpec::continuous(std::function<double(double)> density, int quad_nodes,
                                      std::string name) {
    if (quad_nodes < 2)
        throw std::invalid_argument("continuous ensemble: need at least 2 quadrature nodes");
    EnsembleSpec e;
    e.continuous_ = true;
    e.quad_nodes_ = quad_nodes;
    e.name_ = std::move(name);
    std::vector<double> x, w;
    gauss_legendre_01(quad_nodes, x, w);
    e.preps_.reserve(static_cast<size_t>(quad_nodes));
    for (int i = 0; i < quad_nodes; ++i) {
        const double d = density(x[static_cast<size_t>(i)]);
        if (!(d >= 0.0))
            throw std::invalid_argument("continuous ensemble: density must be nonnegative");
        e.preps_.push_back({x[static_cast<size_t>(i)], w[static_cast<size_t>(i)] * d});
    }
    // Tabulated inverse CDF on a fine grid for sampling.
    const int n = 4096;
    std::vector<double> cdf(static_cast<size_t>(n) + 1, 0.0);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double a = static_cast<double>(i) / n;
        const double b = static_cast<double>(i + 1) / n;
        acc += adaptive_simpson(density, a, b, 1e-12, 20);
        cdf[static_cast<size_t>(i) + 1] = acc;
    }
    if (std::fabs(acc - 1.0) > 1e-8)
        throw std::invalid_argument("continuous ensemble: density must integrate to 1");
    e.inv_cdf_.assign(static_cast<size_t>(n) + 1, 0.0);
    for (int i = 0; i <= n; ++i) {
        // invert cdf at u = i/n by binary search over the table
        const double u = static_cast<double>(i) / n;
        auto it = std::lower_bound(cdf.begin(), cdf.end(), u * acc);
        size_t j = static_cast<size_t>(std::distance(cdf.begin(), it));
        if (j == 0) j = 1;
        const double c0 = cdf[j - 1], c1 = cdf[j];
        const double frac = (c1 > c0) ? (u * acc - c0) / (c1 - c0) : 0.0;
        e.inv_cdf_[static_cast<size_t>(i)] = (static_cast<double>(j) - 1.0 + frac) / n;
    }
    e.validate();
    return e;
}

void EnsembleSpec::validate() const {
    if (preps_.empty()) throw std::invalid_argument("ensemble: no preparations");
    double total = 0.0;
    for (const auto& p : preps_) {
        p.validate();
        total += p.weight;
    }
    const double tol = continuous_ ? 1e-10 : 1e-12;
    if (std::fabs(total - 1.0) > tol)
        throw std::invalid_argument("ensemble: weights must sum to 1, got " +
                                    std::to_string(total));
}

double EnsembleSpec::mean_excited_population() const {
    double s = 0.0;
    for (const auto& p : preps_) s += p.weight * p.p_e;
    return s;
}

double EnsembleSpec::sample_p_e(double u) const {
    if (!continuous_) {
        double acc = 0.0;
        for (const auto& p : preps_) {
            acc += p.weight;
            if (u < acc) return p.p_e;
        }
        return preps_.back().p_e;
    }
    if (inv_cdf_.empty()) return u;  // Haar: identity
    const double x = u * (static_cast<double>(inv_cdf_.size()) - 1.0);
    const size_t j = std::min(static_cast<size_t>(x), inv_cdf_.size() - 2);
    const double frac = x - static_cast<double>(j);
    return inv_cdf_[j] + frac * (inv_cdf_[j + 1] - inv_cdf_[j]);
}

}  // namespace worktraj
