#pragma once

#include <stdexcept>
#include <vector>

#include "worktraj/model.hpp"

namespace worktraj {

// Finite-time erasure target: drive the average excited population from
// p_start (equilibrium 1/2 at a degenerate gap) to p_end within tau.
struct ErasureSpec {
    double tau = 100.0;
    double p_start = 0.5;
    double p_end = 0.01;
    BathSpec bath;
    int grid_size = 200;

    void validate() const {
        if (!(tau > 0.0)) throw std::invalid_argument("erasure: tau must be positive");
        if (!(p_end > 0.0 && p_end < p_start && p_start <= 0.5))
            throw std::invalid_argument("erasure: need 0 < p_end < p_start <= 1/2");
        if (grid_size < 4) throw std::invalid_argument("erasure: grid_size too small");
        bath.validate();
    }
};

// Thrown when the target fidelity is unreachable within tau (the required
// occupation would be negative); reports the binding grid node.
class FeasibilityError : public std::runtime_error {
  public:
    FeasibilityError(const std::string& what, int node)
        : std::runtime_error(what), binding_node(node) {}
    int binding_node;
};

struct ErasureResult {
    DriveProtocol protocol;          // piecewise-linear, E(0) = 0
    std::vector<double> p_path;      // optimized populations on the grid nodes
    double cost_objective = 0.0;     // discrete work functional at the optimum
    double cost_resimulated = 0.0;   // mu_1(tau) of the returned protocol (hierarchy)
    double p_end_achieved = 0.0;     // re-simulated p(tau)
    double cost_refined = 0.0;       // objective re-optimized at 2M nodes (if requested)
    bool refined = false;
    int sweeps = 0;
};

// Work cost of a population path through the inverted master equation
// (the optimizer's objective). Throws FeasibilityError when a cell demands a
// negative occupation.
double erasure_objective(const ErasureSpec& spec, const std::vector<double>& p_path);

// Gap E solving p' = gamma(E) [nbar(E) - (2 nbar(E) + 1) p] for one cell;
// closed form for constant coupling, bisection for Ohmic.
double invert_gap(const ErasureSpec& spec, double p_mid, double p_dot, int node);

ErasureResult optimize_erasure_protocol(const ErasureSpec& spec, bool refine_check = false);

}  // namespace worktraj
