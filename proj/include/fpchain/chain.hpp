#pragma once

#include "fpchain/lattice.hpp"
#include "fpchain/potential.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fpchain {

enum class Scheme { finite_volume, finite_difference };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

/// Probability weights indexed by flat cell index.
struct GridMeasure {
    std::vector<double> weights;

    std::size_t size() const { return weights.size(); }
    double operator[](std::size_t i) const { return weights[i]; }
    double& operator[](std::size_t i) { return weights[i]; }
};

GridMeasure uniform_measure(const GridSpec& grid);
GridMeasure point_mass(const GridSpec& grid, std::size_t i);
/// Cell masses of the uniform law on the box [lo, hi] (one bound per axis).
GridMeasure box_measure(const GridSpec& grid, const std::vector<double>& lo, const std::vector<double>& hi);
/// Rescales to unit mass; throws InputError on negative entries or zero mass.
GridMeasure normalized(std::vector<double> weights);

/// Jump rates c(i, gamma) stored densely, num_moves(d) per state, with zeros
/// for moves that leave the grid.
struct RateTable {
    GridSpec grid;
    double sigma = 1.0;
    Scheme scheme = Scheme::finite_volume;
    std::vector<double> rates;

    /// True when the rates came from an additive potential.
    bool additive = false;
    /// Convexity modulus of the generating potential, if known.
    std::optional<double> kappa;
    /// Cell-averaged potential V^h (finite volume only; empty after CSV import).
    std::vector<double> cell_potential;

    int moves() const { return num_moves(grid.d); }
    std::size_t num_states() const { return grid.num_states(); }
    double rate(std::size_t i, int move) const { return rates[i * moves() + move]; }
    double rate(std::size_t i, Move m) const { return rate(i, m.index()); }
    double& rate(std::size_t i, int move) { return rates[i * moves() + move]; }
    /// Total jump rate out of state i.
    double exit_rate(std::size_t i) const;
};

RateTable fv_rates(const GridSpec& grid, const Potential& V, double sigma, int quadrature_order = 4);

/// Finite-difference rates. Throws PositivityError naming the cell and axis
/// when sigma^2 - (h/2)|d_j V| < 0 at a cell center.
RateTable fd_rates(const GridSpec& grid, const Potential& V, double sigma);

GridMeasure invariant_measure(const RateTable& rates);

/// Solves m L_h = 0, sum m = 1 by dense LU. Throws SolverError if the
/// result is not a nonnegative stationary law.
GridMeasure stationary_solve(const RateTable& rates);

/// Max relative residual of c(i,a)c(ai,b) - c(i,b)c(bi,a) over all cells
/// and pairs of moves along distinct axes. Zero for d = 1.
double check_path_independence(const RateTable& rates);

/// Max relative residual of c(i,+j)m(i) - c(i+he_j,-j)m(i+he_j).
double check_detailed_balance(const RateTable& rates, const GridMeasure& m);

/// CSV with a "# d= K= h= sigma= scheme= additive=" header line and rows
/// flat_index,move,rate where move is "+1", "-2", ... (1-based axis).
void write_rates_csv(std::ostream& os, const RateTable& rates);
RateTable read_rates_csv(std::istream& is);

}  // namespace fpchain
