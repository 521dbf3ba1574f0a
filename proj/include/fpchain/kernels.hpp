#pragma once

// Hot loops shared by the functional, evolve and coupling modules. Each
// routine exists twice with identical signatures: a straightforward serial
// reference and an OpenMP version parallel over states. Per-state results
// are written to their own slot and scalar reductions are summed afterwards
// in flat-index order, so both variants agree bit for bit.

#include "fpchain/chain.hpp"
#include "fpchain/evolve.hpp"
#include "fpchain/phi.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace fpchain::kernels {

/// One term w * Phi(f(a), f(b)) of the coupled quadruple sum.
struct PairTerm {
    std::size_t a = 0;
    std::size_t b = 0;
    double w = 0.0;
};

/// Flattened support S = {(i, delta) : c(i, delta) > 0} together with the
/// coupled moves of every (i, delta).
///
/// Rows of state i are [state_offset[i], state_offset[i+1]); row r pairs
/// state i with row_partner[r] = delta i at rate row_rate[r] and owns the
/// terms [term_offset[r], term_offset[r+1]) with w = c(i,delta) * coupling entry.
struct PairSupport {
    std::vector<std::size_t> state_offset;
    std::vector<std::size_t> row_partner;
    std::vector<double> row_rate;
    std::vector<std::size_t> term_offset;
    std::vector<PairTerm> terms;
};

struct KeySums {
    /// sum c(i,d) c(i,di,g,gb) (Phi(f(gi), f(gb di)) - Phi(f(i), f(di))) m(i)
    double lhs = 0.0;
    /// sum c(i,d) Phi(f(i), f(di)) m(i)
    double base = 0.0;
};

namespace serial {
void generator_apply(const RateTable& rates, std::span<const double> f, std::span<double> out);
void adjoint_apply(const RateTable& rates, std::span<const double> u, std::span<double> out);
void kernel_apply_function(const TransitionKernel& K, std::span<const double> f, std::span<double> out);
void kernel_apply_measure(const TransitionKernel& K, std::span<const double> nu, std::span<double> out);
KeySums key_inequality_sums(const PairSupport& S, const PhiFamily& phi, std::span<const double> f,
                            std::span<const double> m);
}  // namespace serial

namespace parallel {
void generator_apply(const RateTable& rates, std::span<const double> f, std::span<double> out);
void adjoint_apply(const RateTable& rates, std::span<const double> u, std::span<double> out);
void kernel_apply_function(const TransitionKernel& K, std::span<const double> f, std::span<double> out);
void kernel_apply_measure(const TransitionKernel& K, std::span<const double> nu, std::span<double> out);
KeySums key_inequality_sums(const PairSupport& S, const PhiFamily& phi, std::span<const double> f,
                            std::span<const double> m);
}  // namespace parallel

}  // namespace fpchain::kernels
