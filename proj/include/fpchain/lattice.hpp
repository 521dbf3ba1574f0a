#pragma once

#include "fpchain/potential.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace fpchain {

/// Rectangular mesh of cell centers on [-K, K]^d with spacing h.
///
/// Cells are addressed by a flat index in row-major order with axis 0
/// fastest: flat = sum_j n_j * N^j, where n_j in {0, ..., N-1} is the
/// zero-based axis index and N = n_per_axis. The center along axis j is
/// -K + h * (n_j + 1/2).
struct GridSpec {
    int d = 1;
    double K = 1.0;
    double h = 1.0;
    int n_per_axis = 2;

    std::size_t num_states() const;
    std::size_t stride(int axis) const;
    int axis_index(std::size_t flat, int axis) const;
    std::vector<int> multi_index(std::size_t flat) const;
    std::size_t flat_index(std::span<const int> multi) const;
    double center(std::size_t flat, int axis) const;
    std::vector<double> center(std::size_t flat) const;

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Throws GridError unless d >= 1, K > 0, h > 0 and 2K/h is an integer.
GridSpec build_grid(int d, double K, double h);

/// One of the 2d nearest-neighbour moves +e_j / -e_j.
///
/// Moves are indexed as 2 * axis + (sign > 0 ? 0 : 1); the null move "stay"
/// takes the index 2d wherever move sets are extended by it.
struct Move {
    int axis = 0;
    int sign = +1;

    constexpr int index() const { return 2 * axis + (sign > 0 ? 0 : 1); }
    static constexpr Move from_index(int idx) { return Move{idx / 2, (idx % 2 == 0) ? +1 : -1}; }
    constexpr Move inverse() const { return Move{axis, -sign}; }

    friend constexpr bool operator==(Move, Move) = default;
};

constexpr int num_moves(int d) { return 2 * d; }
constexpr int null_move_index(int d) { return 2 * d; }

/// Target of move `m` from cell `i`, or nullopt if it leaves the grid.
std::optional<std::size_t> neighbor(const GridSpec& grid, std::size_t i, Move m);

std::vector<std::pair<Move, std::size_t>> admissible_moves(const GridSpec& grid, std::size_t i);

/// l1 distance between cell centers; neighbours are at distance h.
double graph_distance(const GridSpec& grid, std::size_t i, std::size_t k);
double euclidean_distance(const GridSpec& grid, std::size_t i, std::size_t k);

/// Mean of V over the control volume of cell i, by tensor-product
/// Gauss-Legendre quadrature of the given order per axis (exact for
/// axis-wise polynomials of degree <= 2 * order - 1).
double cell_average(const Potential& V, const GridSpec& grid, std::size_t i, int order = 4);

/// Cell averages for every cell of the grid.
std::vector<double> cell_averages(const Potential& V, const GridSpec& grid, int order = 4);

struct DiagDominance {
    bool dominant = false;
    double min_gap = 0.0;
    std::size_t cell = 0;
    int axis = 0;
};

/// min over cell centers and axes of (D^2V)_jj - sum_{l != j} |(D^2V)_lj|.
/// Heuristic check sampled at cell centers; Hessians of tabulated/callable
/// potentials use central differences with step h/8.
DiagDominance check_diag_dominance(const Potential& V, const GridSpec& grid);

}  // namespace fpchain
