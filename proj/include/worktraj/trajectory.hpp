#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "worktraj/model.hpp"
#include "worktraj/rng.hpp"
#include "worktraj/stats.hpp"

namespace worktraj {

// Precomputed per-step quantities for the stroboscopic chain on a uniform
// grid of n_steps intervals covering [0, t_max]. Survival factors are the
// exact per-step kernels exp(-int rate dt), so the pre-first-jump sector is
// exact in distribution at any dt (events are pinned to grid nodes).
struct StepTable {
    double t_max = 0.0;
    double dt = 0.0;
    std::vector<double> t;       // n_steps + 1 node times
    std::vector<double> energy;  // n_steps + 1
    std::vector<double> f_down;  // n_steps: exp(-int gamma (nbar+1))
    std::vector<double> f_up;    // n_steps: exp(-int gamma nbar)
    std::vector<double> q_down;  // 1 - f_down
    std::vector<double> q_up;    // 1 - f_up

    size_t steps() const { return q_down.size(); }
};

// allow_coarse skips the dt work-bias gate (used when a deliberately coarse
// grid is compared against the exact finite chain on the same grid).
StepTable make_step_table(const DriveProtocol& protocol, const BathSpec& bath, double t_max,
                          size_t n_steps, bool allow_coarse = false);

enum class JumpDirection { ToG, ToE };

struct JumpEvent {
    double time = 0.0;
    JumpDirection direction = JumpDirection::ToG;
    double work_so_far = 0.0;
    double heat_so_far = 0.0;
};

struct TrajectoryRecord {
    size_t prep_index = 0;
    double p_e0 = 0.0;
    std::optional<double> first_jump_time;
    double pe_before_first_jump = 0.0;  // null-evolved population just before the jump
    std::vector<JumpEvent> events;
    double work = 0.0;
    double heat = 0.0;
    double final_p_e = 0.0;
    bool final_eigenstate = false;
    uint64_t seed = 0;
    uint64_t trajectory_index = 0;
};

// One stroboscopic update of a pure state with excited population p_e at time t.
// Enforces the small-step precondition (r_down p_e + r_up p_g) dt < 0.1 on
// instantaneous rates; returns (p_e', event, dW, dQ).
struct StepResult {
    double p_e = 0.0;
    std::optional<JumpDirection> event;
    double dW = 0.0;
    double dQ = 0.0;
};

StepResult step(double p_e, double t, double dt, const DriveProtocol& protocol,
                const BathSpec& bath, Xoshiro256pp& rng);

// Full trajectory, a deterministic function of (inputs, seed, trajectory_index).
TrajectoryRecord simulate_trajectory(const PurePrep& prep, const StepTable& table,
                                     uint64_t master_seed, uint64_t trajectory_index);
TrajectoryRecord simulate_trajectory(const PurePrep& prep, const DriveProtocol& protocol,
                                     const BathSpec& bath, double dt, uint64_t master_seed,
                                     uint64_t trajectory_index = 0);

struct BatchOptions {
    size_t batch_size = 1024;  // fixed batching keeps merges order-stable
    int workers = 0;           // 0: WORKTRAJ_WORKERS env or hardware concurrency
};

// Monte Carlo batch over an ensemble; trajectory i draws its preparation and
// its noise from the stream (seed, i), so the result is independent of worker
// scheduling, bit for bit.
WorkStatistics run_batch(const EnsembleSpec& ensemble, const StepTable& table,
                         uint64_t n_traj, uint64_t seed, const BatchOptions& opts = {});
WorkStatistics run_batch(const EnsembleSpec& ensemble, const DriveProtocol& protocol,
                         const BathSpec& bath, double dt, uint64_t n_traj, uint64_t seed,
                         const BatchOptions& opts = {});

// Same sampling path, accumulating an arbitrary function of the total work
// (used e.g. for empirical exp(-u W) against the discrete oracle).
WorkStatistics run_batch_transformed(const EnsembleSpec& ensemble, const StepTable& table,
                                     uint64_t n_traj, uint64_t seed,
                                     const std::function<double(double)>& f,
                                     const BatchOptions& opts = {});

// Event dump: one row per jump event, CSV-ready.
std::vector<TrajectoryRecord> sample_trajectories(const EnsembleSpec& ensemble,
                                                  const StepTable& table, uint64_t n_traj,
                                                  uint64_t seed);

}  // namespace worktraj
