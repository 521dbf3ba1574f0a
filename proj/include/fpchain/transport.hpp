#pragma once

#include "fpchain/chain.hpp"
#include "fpchain/evolve.hpp"
#include "fpchain/potential.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fpchain {

enum class CostKind { euclidean, graph };

/// Optimal transport between two measures on the same grid with cost
/// |x - y|^p (euclidean) or the l1 graph distance.
struct TransportProblem {
    GridSpec grid;
    GridMeasure source;
    GridMeasure target;
    CostKind cost = CostKind::euclidean;
    int p = 1;
};

struct PlanEntry {
    std::size_t from = 0;
    std::size_t to = 0;
    double mass = 0.0;
};

struct TransportResult {
    double value = 0.0;  // (optimal cost)^{1/p}
    double cost = 0.0;   // optimal cost itself
    std::vector<PlanEntry> plan;
    std::size_t pivots = 0;
};

/// Exact solve by the transportation simplex on integer-scaled masses
/// (total 10^12, largest-remainder rounding). Masses must agree to 1e-12;
/// the target is rescaled onto the source mass within that tolerance.
TransportResult wasserstein(const TransportProblem& problem);

/// Convenience wrappers.
double w1_graph(const GridSpec& grid, const GridMeasure& a, const GridMeasure& b);
double wp_euclid(const GridSpec& grid, const GridMeasure& a, const GridMeasure& b, int p);

enum class ContractionMode { W1_graph, W1_euclid, W2, Wp_1d };

std::string to_string(ContractionMode m);
ContractionMode contraction_mode_from_string(const std::string& s);

struct ContractionReport {
    ContractionMode mode = ContractionMode::W1_graph;
    int p = 1;
    bool discrete = false;
    std::vector<double> times;  // t, or n for the discrete variant
    std::vector<double> distance;
    std::vector<double> bound;
    std::vector<double> excess;  // distance - bound
    double rate = 0.0;           // kappa_1 or kappa used in the bound
    double prefactor = 1.0;      // sqrt(d) for W1_euclid
    double initial_distance = 0.0;
};

/// Distances of (nu p_t, eta p_t) against e^{-rate t} W(nu, eta) (times
/// sqrt(d) in W1_euclid mode). W1 modes use `kappa_1`; W2 and Wp_1d need an
/// additive potential with known convexity modulus kappa and use it as the
/// rate, Wp_1d also needs d = 1. Mismatches raise HypothesisError.
ContractionReport contraction_report(const RateTable& rates, const GridMeasure& nu, const GridMeasure& eta,
                                     std::span<const double> times, ContractionMode mode, double kappa_1,
                                     int p = 2, double tol = 1e-12);

/// Discrete-time variant on nu pi^n with e^{-kappa_1 n tau}.
ContractionReport contraction_report_discrete(const RateTable& rates, const GridMeasure& nu, const GridMeasure& eta,
                                              std::span<const std::size_t> steps, ContractionMode mode,
                                              double kappa_1, int p = 2);

struct RefinementLevel {
    double h = 0.0;
    double distance = 0.0;
    double bound = 0.0;
    double excess = 0.0;
    double constant = 0.0;  // excess / h^{1/p}
};

struct RefinementSweep {
    std::vector<RefinementLevel> levels;
    std::vector<double> ratios;  // excess[k+1] / excess[k]
};

/// W_p excess over e^{-kappa t} W_p(nu, eta) at time t for a sequence of
/// spacings, finite-volume rates, measures produced per grid.
RefinementSweep w2_refinement_sweep(const Potential& V, double sigma, double K, std::span<const double> hs,
                                    const std::function<GridMeasure(const GridSpec&)>& nu,
                                    const std::function<GridMeasure(const GridSpec&)>& eta, double t, int p = 2,
                                    int quadrature_order = 4);

}  // namespace fpchain
