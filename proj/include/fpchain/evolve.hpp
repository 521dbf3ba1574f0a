#pragma once

#include "fpchain/chain.hpp"
#include "fpchain/phi.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace fpchain {

/// Lazy discrete-time kernel pi(i, .) obtained by uniformization.
///
/// T = 2 max_i sum_gamma c(i, gamma), tau = 1/T, p(i, gamma) = c(i, gamma)/T
/// and pi(i, i) = 1 - sum_gamma p(i, gamma) >= 1/2.
struct TransitionKernel {
    GridSpec grid;
    double uniformization = 0.0;  // T
    double tau = 0.0;
    std::vector<double> p;        // num_states * num_moves
    std::vector<double> diag;
    /// Set when tau was forced by the caller; certificates do not apply then.
    bool tau_overridden = false;

    int moves() const { return num_moves(grid.d); }
    std::size_t num_states() const { return grid.num_states(); }
    double prob(std::size_t i, int move) const { return p[i * moves() + move]; }
};

/// Builds the kernel. A positive `tau_override` replaces 1/T (experimental;
/// it must still keep every diagonal entry nonnegative).
TransitionKernel build_kernel(const RateTable& rates, std::optional<double> tau_override = std::nullopt);

/// Poisson truncation: smallest N with P(Poisson(lambda) > N) < tol.
std::size_t poisson_truncation(double lambda, double tol);

/// nu p_t via sum_k e^{-Tt}(Tt)^k/k! nu pi^k, truncated at tail mass < tol.
GridMeasure semigroup_apply(const TransitionKernel& K, const GridMeasure& nu, double t, double tol = 1e-12);
/// S_t f, same series acting on functions.
std::vector<double> semigroup_apply(const TransitionKernel& K, std::span<const double> f, double t,
                                    double tol = 1e-12);

/// Unit-step helpers (nu pi and pi f).
GridMeasure step(const TransitionKernel& K, const GridMeasure& nu);
std::vector<double> step(const TransitionKernel& K, std::span<const double> f);

struct EntropyCurve {
    std::vector<double> times;  // t, or n for discrete curves
    std::vector<double> entropy;
    std::vector<double> bound;
    double fitted_rate = 0.0;
    /// Fraction of trailing samples used by the fit.
    double fit_window = 0.5;
};

/// H^phi(S_t f0 | m) at the given (sorted, nonnegative) times, with the bound
/// e^{-kappa_phi t} H^phi(f0 | m). The fitted rate is a least-squares slope of
/// -log H over the trailing `fit_window` of samples with H > 0.
EntropyCurve entropy_decay_curve(const TransitionKernel& K, const GridMeasure& m, const PhiFamily& phi,
                                 std::span<const double> f0, std::span<const double> times, double kappa_phi,
                                 double tol = 1e-12, double fit_window = 0.5);

struct DiscreteDecayReport {
    EntropyCurve curve;         // times = n
    std::vector<double> fisher; // F(pi^n f)
    std::vector<double> production;
    double c_p = 0.0;
    /// C_f; nullopt when H(f0) = 0.
    std::optional<double> c_f;
    /// e^{-kappa_1 n tau} H(f0), filled on request.
    std::vector<double> kappa1_bound;
    double min_slack_condition_i = 0.0;
    double min_slack_condition_ii = 0.0;
    double min_slack_bound = 0.0;
    double min_slack_kappa1 = 0.0;
    std::optional<std::size_t> first_violation;
    bool ok = true;
};

/// Iterates pi^n f0 for n = 0..n_max and checks conditions (i) and (ii) and
/// the decay bound with slack `tol`. Throws VerificationError with the first
/// witnessing n when `throw_on_violation` is set.
DiscreteDecayReport discrete_decay_report(const TransitionKernel& K, const RateTable& rates, const GridMeasure& m,
                                          const PhiFamily& phi, std::span<const double> f0, std::size_t n_max,
                                          double kappa_phi, std::optional<double> kappa_1 = std::nullopt,
                                          double tol = 1e-10, bool throw_on_violation = false);

/// Least-squares slope of -log(y) against x.
double fit_exponential_rate(std::span<const double> x, std::span<const double> y);

}  // namespace fpchain
