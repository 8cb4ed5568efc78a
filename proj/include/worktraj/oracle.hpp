#pragma once

#include <cstddef>
#include <vector>

#include "worktraj/model.hpp"

namespace worktraj {

// Exact finite chain for the stroboscopic process: N steps with node energies
// E[0..N] and per-step jump probabilities q = 1 - exp(-int rate dt). Small N
// only; this is a correctness instrument, not a production path.
struct DiscreteModel {
    std::vector<double> energy;  // N + 1
    std::vector<double> t;       // N + 1 (informational)
    std::vector<double> q_down;  // N
    std::vector<double> q_up;    // N

    size_t steps() const { return q_down.size(); }
    void validate() const;
};

// Discretization matching the Monte Carlo chain's convention exactly, built
// independently from the rate laws.
DiscreteModel discretize_model(const DriveProtocol& protocol, const BathSpec& bath,
                               double t_max, size_t n_steps);

// Exact MGF sum_paths P e^{-uW} by full path enumeration (guarded to N <= 16).
double enumerate_mgf(const EnsembleSpec& ensemble, const DiscreteModel& model, double u);
double enumerate_mgf(const PurePrep& prep, const DiscreteModel& model, double u);

// Same value via per-step 2x2 tilted transfer matrices stitched to the
// null-segment weights; agreement with enumerate_mgf to 1e-12 is the contract.
double matrix_product_mgf(const EnsembleSpec& ensemble, const DiscreteModel& model, double u);
double matrix_product_mgf(const PurePrep& prep, const DiscreteModel& model, double u);

}  // namespace worktraj
