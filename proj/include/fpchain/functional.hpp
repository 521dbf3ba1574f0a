#pragma once

#include "fpchain/chain.hpp"
#include "fpchain/evolve.hpp"
#include "fpchain/phi.hpp"

#include <span>
#include <vector>

namespace fpchain {

/// Real values indexed by flat cell index.
using GridFunction = std::vector<double>;

/// (L_h f)(i) = sum_gamma c(i,gamma)(f(gamma i) - f(i)).
GridFunction apply_generator(const RateTable& rates, std::span<const double> f);
/// Adjoint in the unweighted inner product; L_h^* m_h = 0.
GridFunction apply_adjoint(const RateTable& rates, std::span<const double> u);

struct DirichletPair {
    double generator_form = 0.0;  // -sum f (L g) m
    double symmetric_form = 0.0;  // 1/2 sum c grad f grad g m
    double scale = 0.0;           // roundoff scale of either sum, for relative comparisons
};

DirichletPair dirichlet_forms(const RateTable& rates, const GridMeasure& m, std::span<const double> f,
                              std::span<const double> g);

/// E(f, g) = -sum_i f(i)(L_h g)(i) m(i). Throws VerificationError when the
/// symmetric-sum evaluation disagrees beyond `rel_tol` (non-reversible chain).
double dirichlet_form(const RateTable& rates, const GridMeasure& m, std::span<const double> f,
                      std::span<const double> g, double rel_tol = 1e-10);

/// sum phi(f) m - phi(sum f m). Rejects negative entries.
double phi_entropy(const PhiFamily& phi, std::span<const double> f, const GridMeasure& m);

/// E(phi'(f), f). For alpha = 1 nonpositive entries are rejected unless
/// `floor_at_eps` is set, in which case they are raised to 1e-12 (a
/// regularisation, reported on stderr).
double fisher_information(const PhiFamily& phi, const RateTable& rates, const GridMeasure& m,
                          std::span<const double> f, bool floor_at_eps = false);

/// P(f) = -(H(pi f) - H(f)) / tau.
double entropy_production(const PhiFamily& phi, const TransitionKernel& K, const GridMeasure& m,
                          std::span<const double> f);

}  // namespace fpchain
