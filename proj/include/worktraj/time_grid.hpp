#pragma once

#include <cstddef>
#include <vector>

#include "worktraj/model.hpp"

namespace worktraj {

// Shared solver grid: a strictly increasing sequence of cells, each carrying
// its midpoint, so RK4 stage times and quadrature nodes coincide with stored
// table entries (no interpolation inside a solve). Fine nodes are indexed
// 0..2C; cell c spans fine nodes (2c, 2c+1, 2c+2).
struct TimeGrid {
    std::vector<double> t;        // fine nodes, odd length
    bool singular_start = false;  // first cell is a micro-cell after a singular Edot(0)

    size_t cells() const { return (t.size() - 1) / 2; }
    size_t boundaries() const { return cells() + 1; }
    double t_begin() const { return t.front(); }
    double t_end() const { return t.back(); }
    double boundary(size_t c) const { return t[2 * c]; }

    // Index of the cell containing time x (clamped).
    size_t cell_of(double x) const;

    // Linear interpolation of a fine-node array at time x.
    double interpolate(const std::vector<double>& values, double x) const;

    // Every cell split in two (for Richardson / resolution diagnostics).
    TimeGrid refined() const;
};

struct GridOptions {
    int base_cells = 800;        // uniform backbone resolution
    double max_rate_step = 0.4;   // cap on (thermal rate) * cell width
    double max_rate_ratio = 1.07;  // cap on max/min rate within a dynamically relevant cell
    double max_tilt_step = 0.05; // cap on u_ref * |Delta E| per cell
    double u_ref = 1.0;          // largest |u| the grid must support (>= beta recommended)
    double phi_cap = 0.0;        // if > 0, also cap |phi| * cell width (xi solves)
    double beta = 1.0;           // used with phi_cap
    size_t max_cells = 4000000;
};

// Build a grid on [0, t_end] for the given drive and bath: uniform backbone,
// cells split until the local rate/tilt caps hold, protocol knots inserted as
// boundaries, and a micro first cell when Edot(0) is unbounded.
TimeGrid make_time_grid(const DriveProtocol& protocol, const BathSpec& bath, double t_end,
                        const GridOptions& opts);

}  // namespace worktraj
