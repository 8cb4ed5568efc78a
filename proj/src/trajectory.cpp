#include "worktraj/trajectory.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#include "worktraj/quadrature.hpp"

namespace worktraj {

StepTable make_step_table(const DriveProtocol& protocol, const BathSpec& bath, double t_max,
                          size_t n_steps, bool allow_coarse) {
    if (!(t_max > 0.0) || t_max > protocol.duration() * (1.0 + 1e-12))
        throw std::invalid_argument("make_step_table: t_max must lie in (0, tau]");
    if (n_steps == 0) throw std::invalid_argument("make_step_table: need at least one step");
    StepTable st;
    st.t_max = t_max;
    st.dt = t_max / static_cast<double>(n_steps);
    st.t.resize(n_steps + 1);
    st.energy.resize(n_steps + 1);
    for (size_t n = 0; n <= n_steps; ++n) {
        st.t[n] = t_max * static_cast<double>(n) / static_cast<double>(n_steps);
        st.energy[n] = protocol.energy(st.t[n]);
    }
    st.f_down.resize(n_steps);
    st.f_up.resize(n_steps);
    st.q_down.resize(n_steps);
    st.q_up.resize(n_steps);
    auto rd_fn = [&](double t) { return rates(protocol.energy(t), bath).first; };
    auto ru_fn = [&](double t) { return rates(protocol.energy(t), bath).second; };
    const double e_scale = std::max(
        1e-12, *std::max_element(st.energy.begin(), st.energy.end()));
    // Steps whose jump hazard exceeds the small-step regime can misplace the
    // work of trajectories that jump inside them by at most the step's energy
    // span. Near a degenerate gap the hazard legitimately exceeds any fixed
    // r*dt bound (the pre-first-jump sector stays exact), so the rejection
    // criterion is the accumulated work-bias budget, not the pointwise rate.
    double bias_budget = 0.0;
    double worst_t = 0.0, worst_hazard = 0.0;
    for (size_t n = 0; n < n_steps; ++n) {
        const double a = st.t[n], b = st.t[n + 1];
        const double dl_d = adaptive_simpson(rd_fn, a, b, 1e-13);
        const double dl_u = adaptive_simpson(ru_fn, a, b, 1e-13);
        st.f_down[n] = std::exp(-dl_d);
        st.f_up[n] = std::exp(-dl_u);
        st.q_down[n] = -std::expm1(-dl_d);
        st.q_up[n] = -std::expm1(-dl_u);
        const double hazard = std::max(dl_d, dl_u);
        if (hazard > 0.1) {
            const double span = std::fabs(st.energy[n + 1] - st.energy[n]);
            bias_budget += std::min(hazard, 1.0) * span;
            if (hazard > worst_hazard) {
                worst_hazard = hazard;
                worst_t = a;
            }
        }
    }
    if (!allow_coarse && bias_budget > 0.02 * e_scale) {
        throw std::invalid_argument(
            "make_step_table: dt too coarse (work-bias budget " +
            std::to_string(bias_budget) + " vs scale " + std::to_string(e_scale) +
            "; worst per-step hazard " + std::to_string(worst_hazard) + " near t = " +
            std::to_string(worst_t) + ")");
    }
    return st;
}

StepResult step(double p_e, double t, double dt, const DriveProtocol& protocol,
                const BathSpec& bath, Xoshiro256pp& rng) {
    if (!(p_e >= 0.0 && p_e <= 1.0)) throw std::invalid_argument("step: p_e in [0,1]");
    const auto [rd, ru] = rates(protocol.energy(t), bath);
    if ((rd * p_e + ru * (1.0 - p_e)) * dt >= 0.1)
        throw std::invalid_argument("step: dt violates (r_down p_e + r_up p_g) dt < 0.1");
    auto rd_fn = [&](double s) { return rates(protocol.energy(s), bath).first; };
    auto ru_fn = [&](double s) { return rates(protocol.energy(s), bath).second; };
    const double fd = std::exp(-adaptive_simpson(rd_fn, t, t + dt, 1e-13));
    const double fu = std::exp(-adaptive_simpson(ru_fn, t, t + dt, 1e-13));
    const double E0 = protocol.energy(t);
    const double E1 = protocol.energy(t + dt);

    StepResult r;
    const double pg = 1.0 - p_e;
    const double pjg = p_e * (1.0 - fd);
    const double pje = pg * (1.0 - fu);
    const double u = rng.next_double();
    if (u < pjg) {
        r.event = JumpDirection::ToG;
        r.dQ = E0 * (0.0 - p_e);
        r.p_e = 0.0;
    } else if (u < pjg + pje) {
        r.event = JumpDirection::ToE;
        r.dQ = E0 * (1.0 - p_e);
        r.p_e = 1.0;
    } else {
        const double num = p_e * fd;
        const double den = num + pg * fu;
        r.p_e = (den > 0.0) ? num / den : p_e;
        r.dQ = E0 * (r.p_e - p_e);
    }
    r.dW = r.p_e * (E1 - E0);
    return r;
}

namespace {

// Core chain shared by every sampler. One uniform draw per step, for every
// state, so stream consumption is identical across code paths.
template <typename OnJump>
void run_chain(const StepTable& st, double pe0, Xoshiro256pp& rng, double& W, double& Q,
               double& pe_out, OnJump&& on_jump) {
    double pe = pe0;
    double W_acc = 0.0, Q_acc = 0.0;
    const size_t N = st.steps();
    for (size_t n = 0; n < N; ++n) {
        const double E0 = st.energy[n];
        const double pg = 1.0 - pe;
        const double pjg = pe * st.q_down[n];
        const double pje = pg * st.q_up[n];
        const double u = rng.next_double();
        if (u < pjg) {
            Q_acc += E0 * (0.0 - pe);
            on_jump(n, JumpDirection::ToG, pe, W_acc, Q_acc);
            pe = 0.0;
        } else if (u < pjg + pje) {
            Q_acc += E0 * (1.0 - pe);
            on_jump(n, JumpDirection::ToE, pe, W_acc, Q_acc);
            pe = 1.0;
        } else {
            const double num = pe * st.f_down[n];
            const double den = num + pg * st.f_up[n];
            const double pe2 = (den > 0.0) ? num / den : pe;
            Q_acc += E0 * (pe2 - pe);
            pe = pe2;
        }
        W_acc += pe * (st.energy[n + 1] - E0);
    }
    W = W_acc;
    Q = Q_acc;
    pe_out = pe;
}

int resolve_workers(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("WORKTRAJ_WORKERS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

}  // namespace

TrajectoryRecord simulate_trajectory(const PurePrep& prep, const StepTable& table,
                                     uint64_t master_seed, uint64_t trajectory_index) {
    prep.validate();
    TrajectoryRecord rec;
    rec.p_e0 = prep.p_e;
    rec.seed = master_seed;
    rec.trajectory_index = trajectory_index;
    Xoshiro256pp rng(master_seed, trajectory_index);
    bool first = true;
    run_chain(table, prep.p_e, rng, rec.work, rec.heat, rec.final_p_e,
              [&](size_t n, JumpDirection dir, double pe_before, double w_so_far,
                  double q_so_far) {
                  if (first) {
                      rec.first_jump_time = table.t[n];
                      rec.pe_before_first_jump = pe_before;
                      first = false;
                  }
                  rec.events.push_back({table.t[n], dir, w_so_far, q_so_far});
              });
    rec.final_eigenstate = rec.final_p_e == 0.0 || rec.final_p_e == 1.0;
    return rec;
}

TrajectoryRecord simulate_trajectory(const PurePrep& prep, const DriveProtocol& protocol,
                                     const BathSpec& bath, double dt, uint64_t master_seed,
                                     uint64_t trajectory_index) {
    const double t_max = protocol.duration();
    const size_t n = std::max<size_t>(1, static_cast<size_t>(std::llround(t_max / dt)));
    return simulate_trajectory(prep, make_step_table(protocol, bath, t_max, n), master_seed,
                               trajectory_index);
}

WorkStatistics run_batch_transformed(const EnsembleSpec& ensemble, const StepTable& table,
                                     uint64_t n_traj, uint64_t seed,
                                     const std::function<double(double)>& f,
                                     const BatchOptions& opts) {
    if (n_traj == 0) throw std::invalid_argument("run_batch: n_traj must be >= 1");
    const size_t bs = std::max<size_t>(1, opts.batch_size);
    const size_t n_batches = static_cast<size_t>((n_traj + bs - 1) / bs);
    std::vector<MomentAccumulator> batches(n_batches);

    auto do_batch = [&](size_t b) {
        MomentAccumulator acc;
        const uint64_t lo = static_cast<uint64_t>(b) * bs;
        const uint64_t hi = std::min<uint64_t>(n_traj, lo + bs);
        for (uint64_t i = lo; i < hi; ++i) {
            Xoshiro256pp rng(seed, i);
            const double pe0 = ensemble.sample_p_e(rng.next_double());
            double W, Q, pe_end;
            run_chain(table, pe0, rng, W, Q, pe_end,
                      [](size_t, JumpDirection, double, double, double) {});
            acc.add(f(W));
        }
        batches[b] = acc;
    };

    const int workers = std::min<int>(resolve_workers(opts.workers),
                                      static_cast<int>(n_batches));
    if (workers <= 1) {
        for (size_t b = 0; b < n_batches; ++b) do_batch(b);
    } else {
        std::atomic<size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (;;) {
                    const size_t b = next.fetch_add(1);
                    if (b >= n_batches) return;
                    do_batch(b);
                }
            });
        }
        for (auto& th : pool) th.join();
    }
    return WorkStatistics::from_batches(batches);
}

WorkStatistics run_batch(const EnsembleSpec& ensemble, const StepTable& table,
                         uint64_t n_traj, uint64_t seed, const BatchOptions& opts) {
    return run_batch_transformed(ensemble, table, n_traj, seed,
                                 [](double w) { return w; }, opts);
}

WorkStatistics run_batch(const EnsembleSpec& ensemble, const DriveProtocol& protocol,
                         const BathSpec& bath, double dt, uint64_t n_traj, uint64_t seed,
                         const BatchOptions& opts) {
    const double t_max = protocol.duration();
    const size_t n = std::max<size_t>(1, static_cast<size_t>(std::llround(t_max / dt)));
    return run_batch(ensemble, make_step_table(protocol, bath, t_max, n), n_traj, seed, opts);
}

std::vector<TrajectoryRecord> sample_trajectories(const EnsembleSpec& ensemble,
                                                  const StepTable& table, uint64_t n_traj,
                                                  uint64_t seed) {
    std::vector<TrajectoryRecord> out;
    out.reserve(static_cast<size_t>(n_traj));
    for (uint64_t i = 0; i < n_traj; ++i) {
        Xoshiro256pp rng(seed, i);
        const double pe0 = ensemble.sample_p_e(rng.next_double());
        TrajectoryRecord rec;
        rec.p_e0 = pe0;
        rec.seed = seed;
        rec.trajectory_index = i;
        bool first = true;
        run_chain(table, pe0, rng, rec.work, rec.heat, rec.final_p_e,
                  [&](size_t n, JumpDirection dir, double pe_before, double w_so_far,
                      double q_so_far) {
                      if (first) {
                          rec.first_jump_time = table.t[n];
                          rec.pe_before_first_jump = pe_before;
                          first = false;
                      }
                      rec.events.push_back({table.t[n], dir, w_so_far, q_so_far});
                  });
        rec.final_eigenstate = rec.final_p_e == 0.0 || rec.final_p_e == 1.0;
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace worktraj
