#include "worktraj/oracle.hpp"

#include <cmath>
#include <stdexcept>

#include "worktraj/quadrature.hpp"

namespace worktraj {

void DiscreteModel::validate() const {
    const size_t n = steps();
    if (n == 0 || energy.size() != n + 1 || q_up.size() != n)
        throw std::invalid_argument("discrete model: inconsistent sizes");
    if (n > 16) throw std::invalid_argument("discrete model: N > 16 rejected");
    for (size_t i = 0; i < n; ++i) {
        if (!(q_down[i] >= 0.0 && q_down[i] < 1.0 && q_up[i] >= 0.0 && q_up[i] < 1.0))
            throw std::invalid_argument("discrete model: per-step probabilities in [0, 1)");
    }
}

DiscreteModel discretize_model(const DriveProtocol& protocol, const BathSpec& bath,
                               double t_max, size_t n_steps) {
    DiscreteModel m;
    m.energy.resize(n_steps + 1);
    m.t.resize(n_steps + 1);
    for (size_t n = 0; n <= n_steps; ++n) {
        m.t[n] = t_max * static_cast<double>(n) / static_cast<double>(n_steps);
        m.energy[n] = protocol.energy(m.t[n]);
    }
    auto rd_fn = [&](double t) { return rates(protocol.energy(t), bath).first; };
    auto ru_fn = [&](double t) { return rates(protocol.energy(t), bath).second; };
    m.q_down.resize(n_steps);
    m.q_up.resize(n_steps);
    for (size_t n = 0; n < n_steps; ++n) {
        m.q_down[n] = -std::expm1(-adaptive_simpson(rd_fn, m.t[n], m.t[n + 1], 1e-13));
        m.q_up[n] = -std::expm1(-adaptive_simpson(ru_fn, m.t[n], m.t[n + 1], 1e-13));
    }
    m.validate();
    return m;
}

namespace {

// Exhaustive sum over the post-first-jump two-state chain, starting in
// `excited` after the event at step k (work for step k already included).
double enumerate_classical(const DiscreteModel& m, size_t next_step, bool excited,
                           double weight, double work, double u) {
    if (next_step == m.steps()) return weight * std::exp(-u * work);
    const size_t n = next_step;
    const double dE = m.energy[n + 1] - m.energy[n];
    double total = 0.0;
    if (excited) {
        total += enumerate_classical(m, n + 1, false, weight * m.q_down[n], work, u);
        total += enumerate_classical(m, n + 1, true, weight * (1.0 - m.q_down[n]),
                                     work + dE, u);
    } else {
        total += enumerate_classical(m, n + 1, true, weight * m.q_up[n], work + dE, u);
        total += enumerate_classical(m, n + 1, false, weight * (1.0 - m.q_up[n]), work, u);
    }
    return total;
}

}  // namespace

double enumerate_mgf(const PurePrep& prep, const DiscreteModel& model, double u) {
    model.validate();
    prep.validate();
    const size_t N = model.steps();
    double ve = prep.p_e, vg = 1.0 - prep.p_e;  // unnormalized null-sector weights
    double w_null = 0.0;
    double total = 0.0;
    for (size_t k = 0; k < N; ++k) {
        const double dE = model.energy[k + 1] - model.energy[k];
        // first jump at step k
        total += enumerate_classical(model, k + 1, false, ve * model.q_down[k], w_null, u);
        total += enumerate_classical(model, k + 1, true, vg * model.q_up[k], w_null + dE, u);
        // null event at step k: populations rescale, work accrues at the new weight
        ve *= 1.0 - model.q_down[k];
        vg *= 1.0 - model.q_up[k];
        const double den = ve + vg;
        w_null += (den > 0.0 ? ve / den : 0.0) * dE;
    }
    total += (ve + vg) * std::exp(-u * w_null);
    return total;
}

double enumerate_mgf(const EnsembleSpec& ensemble, const DiscreteModel& model, double u) {
    double g = 0.0;
    for (const auto& p : ensemble.preps()) g += p.weight * enumerate_mgf(p, model, u);
    return g;
}

double matrix_product_mgf(const PurePrep& prep, const DiscreteModel& model, double u) {
    model.validate();
    prep.validate();
    const size_t N = model.steps();
    // z_k = (1,1) * A_{N-1} ... A_k, built backwards; A_n = D_n T_n with
    // D_n = diag(e^{-u dE_n}, 1) and T_n the column-stochastic transfer matrix.
    std::vector<double> ze(N + 1), zg(N + 1);
    ze[N] = 1.0;
    zg[N] = 1.0;
    for (size_t k = N; k-- > 0;) {
        const double dE = model.energy[k + 1] - model.energy[k];
        const double te = std::exp(-u * dE);
        const double fd = 1.0 - model.q_down[k];
        const double fu = 1.0 - model.q_up[k];
        // z_k[j] = sum_{j'} z_{k+1}[j'] * tilt(j') * T[j', j]
        const double we = ze[k + 1] * te;  // weight of landing in e for step k
        const double wg = zg[k + 1];
        ze[k] = we * fd + wg * model.q_down[k];
        zg[k] = we * model.q_up[k] + wg * fu;
    }

    double ve = prep.p_e, vg = 1.0 - prep.p_e;
    double w_null = 0.0;
    double total = 0.0;
    for (size_t k = 0; k < N; ++k) {
        const double dE = model.energy[k + 1] - model.energy[k];
        const double te = std::exp(-u * dE);
        // first jump at t_k: to g from the e component, to e from the g component;
        // the post-jump state carries the step-k tilt before the suffix product.
        const double jump_g = ve * model.q_down[k];
        const double jump_e = vg * model.q_up[k];
        total += std::exp(-u * w_null) *
                 (zg[k + 1] * jump_g + ze[k + 1] * te * jump_e);
        ve *= 1.0 - model.q_down[k];
        vg *= 1.0 - model.q_up[k];
        const double den = ve + vg;
        w_null += (den > 0.0 ? ve / den : 0.0) * dE;
    }
    total += (ve + vg) * std::exp(-u * w_null);
    return total;
}

double matrix_product_mgf(const EnsembleSpec& ensemble, const DiscreteModel& model,
                          double u) {
    double g = 0.0;
    for (const auto& p : ensemble.preps()) g += p.weight * matrix_product_mgf(p, model, u);
    return g;
}

}  // namespace worktraj
