#pragma once

#include "fpchain/chain.hpp"
#include "fpchain/evolve.hpp"
#include "fpchain/potential.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace fpchain {

struct SimConfig {
    std::uint64_t seed = 1;
    std::size_t n_paths = 1000;
    double horizon = 1.0;
    double sde_step = 1e-3;
};

/// Identifier of the per-path generator, echoed into output headers.
inline constexpr const char* kRngId = "mt19937_64/seed_seq(seed_lo,seed_hi,path_lo,path_hi)";

/// Independent stream for one path; depends only on (seed, path).
std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t path);

struct TrajectoryBatch {
    std::vector<std::size_t> terminal;
    /// Per path (time, new state) after each actual jump; filled on request.
    std::vector<std::vector<std::pair<double, std::size_t>>> jumps;
};

/// Uniformized simulation: exponential(1)/T holding times and jump-chain
/// steps from the lazy kernel until the clock passes the horizon.
TrajectoryBatch sample_ctmc(const RateTable& rates, const GridMeasure& initial, const SimConfig& cfg,
                            bool log_jumps = false);

enum class CouplingSource { neighbor, product };

struct CoupledRun {
    std::vector<double> times;
    std::vector<double> mean_distance;   // E d(Y1_t, Y2_t), graph metric
    std::vector<double> stderr_distance;
    double fitted_rate = 0.0;
    /// Spread of the rate fitted on 20 disjoint path batches, over sqrt(20).
    double rate_stderr = 0.0;
    std::vector<std::size_t> terminal_first;
    std::vector<std::size_t> terminal_second;
};

/// Two copies driven by a shared uniformization clock and a coupled kernel:
/// the synchronous product coupling, or the maximal neighbour coupling glued
/// along an axis-ordered geodesic for pairs further apart. Initial pairs are
/// drawn from an optimal W1 (graph metric) plan between nu and eta.
CoupledRun sample_coupled_pair(CouplingSource source, const RateTable& rates, const GridMeasure& nu,
                               const GridMeasure& eta, const SimConfig& cfg, std::span<const double> obs_times);

/// Terminal positions, n_paths x d row-major.
struct SdeBatch {
    int d = 1;
    std::vector<double> terminal;
};

using InitialSampler = std::function<std::vector<double>(std::mt19937_64&)>;

/// Euler-Maruyama for dX = -grad V dt + sqrt(2 sigma^2) dB on [-K, K]^d with
/// coordinate-wise fold-back reflection. Steps below h^2/(4 sigma^2) are
/// advisable when comparing against a chain of spacing h.
SdeBatch sample_reflected_sde(const Potential& V, double sigma, double K, const InitialSampler& initial,
                              const SimConfig& cfg);

/// Fold a coordinate back into [-K, K].
double reflect_into(double x, double K);

/// Empirical law of terminal cells.
GridMeasure empirical_law(const GridSpec& grid, std::span<const std::size_t> states);
/// Empirical law of SDE terminal points binned to the grid cells.
GridMeasure bin_to_grid(const GridSpec& grid, const SdeBatch& batch);

double total_variation(const GridMeasure& a, const GridMeasure& b);

/// Sampler for the uniform law on a box.
InitialSampler uniform_box_sampler(std::vector<double> lo, std::vector<double> hi);

}  // namespace fpchain
