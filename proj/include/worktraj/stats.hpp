#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace worktraj {

// Single-pass accumulator for mean and central moments up to order 4
// (Pebay update/merge formulas). Merging is exact and associative in value,
// so fixed-size batches can be folded in a fixed order for determinism.
struct MomentAccumulator {
    uint64_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;
    double m3 = 0.0;
    double m4 = 0.0;

    void add(double x) {
        const double n1 = static_cast<double>(n);
        n += 1;
        const double nn = static_cast<double>(n);
        const double delta = x - mean;
        const double dn = delta / nn;
        const double dn2 = dn * dn;
        const double term1 = delta * dn * n1;
        mean += dn;
        m4 += term1 * dn2 * (nn * nn - 3.0 * nn + 3.0) + 6.0 * dn2 * m2 - 4.0 * dn * m3;
        m3 += term1 * dn * (nn - 2.0) - 3.0 * dn * m2;
        m2 += term1;
    }

    void merge(const MomentAccumulator& o) {
        if (o.n == 0) return;
        if (n == 0) {
            *this = o;
            return;
        }
        const double na = static_cast<double>(n), nb = static_cast<double>(o.n);
        const double nt = na + nb;
        const double d = o.mean - mean;
        const double d2 = d * d;
        const double m2t = m2 + o.m2 + d2 * na * nb / nt;
        const double m3t = m3 + o.m3 + d * d2 * na * nb * (na - nb) / (nt * nt) +
                           3.0 * d * (na * o.m2 - nb * m2) / nt;
        const double m4t =
            m4 + o.m4 +
            d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / (nt * nt * nt) +
            6.0 * d2 * (na * na * o.m2 + nb * nb * m2) / (nt * nt) +
            4.0 * d * (na * o.m3 - nb * m3) / nt;
        mean += d * nb / nt;
        m2 = m2t;
        m3 = m3t;
        m4 = m4t;
        n += o.n;
    }

    double central(int order) const {
        const double nn = static_cast<double>(n);
        if (n == 0) return 0.0;
        switch (order) {
            case 2: return m2 / nn;
            case 3: return m3 / nn;
            case 4: return m4 / nn;
            default: return 0.0;
        }
    }
    double variance() const { return central(2); }
};

// Batch-level summary of a Monte Carlo work sample: central moments, sample
// cumulants, and jackknife-over-batches standard errors for the mean and
// the variance.
struct WorkStatistics {
    uint64_t count = 0;
    double mean = 0.0;
    double central2 = 0.0;
    double central3 = 0.0;
    double central4 = 0.0;
    double kappa2 = 0.0;
    double kappa3 = 0.0;
    double kappa4 = 0.0;
    double se_mean = 0.0;
    double se_variance = 0.0;
    double se_central3 = 0.0;
    bool single_sample = false;  // count < 2: dispersion is not estimable

    static WorkStatistics from_batches(const std::vector<MomentAccumulator>& batches);
};

inline WorkStatistics WorkStatistics::from_batches(
    const std::vector<MomentAccumulator>& batches) {
    MomentAccumulator total;
    for (const auto& b : batches) total.merge(b);

    WorkStatistics s;
    s.count = total.n;
    s.mean = total.mean;
    s.central2 = total.central(2);
    s.central3 = total.central(3);
    s.central4 = total.central(4);
    s.kappa2 = s.central2;
    s.kappa3 = s.central3;
    s.kappa4 = s.central4 - 3.0 * s.central2 * s.central2;
    s.single_sample = total.n < 2;

    // Jackknife over batches via prefix/suffix merges.
    size_t nb = 0;
    for (const auto& b : batches)
        if (b.n > 0) ++nb;
    if (nb >= 2) {
        std::vector<MomentAccumulator> active;
        active.reserve(nb);
        for (const auto& b : batches)
            if (b.n > 0) active.push_back(b);
        std::vector<MomentAccumulator> prefix(nb + 1), suffix(nb + 1);
        for (size_t i = 0; i < nb; ++i) {
            prefix[i + 1] = prefix[i];
            prefix[i + 1].merge(active[i]);
        }
        for (size_t i = nb; i-- > 0;) {
            suffix[i] = suffix[i + 1];
            suffix[i].merge(active[i]);
        }
        std::vector<double> loo_mean(nb), loo_var(nb), loo_m3(nb);
        double mbar = 0.0, vbar = 0.0, tbar = 0.0;
        for (size_t i = 0; i < nb; ++i) {
            MomentAccumulator loo = prefix[i];
            loo.merge(suffix[i + 1]);
            loo_mean[i] = loo.mean;
            loo_var[i] = loo.variance();
            loo_m3[i] = loo.central(3);
            mbar += loo_mean[i];
            vbar += loo_var[i];
            tbar += loo_m3[i];
        }
        mbar /= static_cast<double>(nb);
        vbar /= static_cast<double>(nb);
        tbar /= static_cast<double>(nb);
        double sm = 0.0, sv = 0.0, st = 0.0;
        for (size_t i = 0; i < nb; ++i) {
            sm += (loo_mean[i] - mbar) * (loo_mean[i] - mbar);
            sv += (loo_var[i] - vbar) * (loo_var[i] - vbar);
            st += (loo_m3[i] - tbar) * (loo_m3[i] - tbar);
        }
        const double fac = (static_cast<double>(nb) - 1.0) / static_cast<double>(nb);
        s.se_mean = std::sqrt(fac * sm);
        s.se_variance = std::sqrt(fac * sv);
        s.se_central3 = std::sqrt(fac * st);
    }
    return s;
}

}  // namespace worktraj
