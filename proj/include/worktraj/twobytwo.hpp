#pragma once

#include <cmath>

namespace worktraj {

// Real 2x2 matrix in the fixed (e, g) basis ordering: index 0 = excited row/col,
// index 1 = ground. Matches the appendix-style matrix layout used throughout.
struct TwoByTwo {
    double ee = 0.0;
    double eg = 0.0;
    double ge = 0.0;
    double gg = 0.0;

    static TwoByTwo zero() { return {}; }
    static TwoByTwo diag(double e, double g) { return {e, 0.0, 0.0, g}; }

    double sum() const { return ee + eg + ge + gg; }
    double row_e_sum() const { return ee + eg; }
    double row_g_sum() const { return ge + gg; }
    double col_e_sum() const { return ee + ge; }
    double col_g_sum() const { return eg + gg; }

    bool finite() const {
        return std::isfinite(ee) && std::isfinite(eg) && std::isfinite(ge) &&
               std::isfinite(gg);
    }

    TwoByTwo& operator+=(const TwoByTwo& o) {
        ee += o.ee;
        eg += o.eg;
        ge += o.ge;
        gg += o.gg;
        return *this;
    }
    friend TwoByTwo operator+(TwoByTwo a, const TwoByTwo& b) { return a += b; }
    friend TwoByTwo operator-(const TwoByTwo& a, const TwoByTwo& b) {
        return {a.ee - b.ee, a.eg - b.eg, a.ge - b.ge, a.gg - b.gg};
    }
    friend TwoByTwo operator*(double s, const TwoByTwo& m) {
        return {s * m.ee, s * m.eg, s * m.ge, s * m.gg};
    }
    friend TwoByTwo operator*(const TwoByTwo& a, const TwoByTwo& b) {
        return {a.ee * b.ee + a.eg * b.ge, a.ee * b.eg + a.eg * b.gg,
                a.ge * b.ee + a.gg * b.ge, a.ge * b.eg + a.gg * b.gg};
    }

    double max_abs_diff(const TwoByTwo& o) const {
        double d = std::fabs(ee - o.ee);
        d = std::max(d, std::fabs(eg - o.eg));
        d = std::max(d, std::fabs(ge - o.ge));
        d = std::max(d, std::fabs(gg - o.gg));
        return d;
    }
};

}  // namespace worktraj
