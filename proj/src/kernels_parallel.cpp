#include "kernels_detail.hpp"

#include <omp.h>

#include <cstdint>

namespace fpchain::kernels::parallel {

namespace {
using idx_t = std::int64_t;
}

void generator_apply(const RateTable& rates, std::span<const double> f, std::span<double> out) {
    const detail::Stencil s(rates.grid);
    const idx_t n = static_cast<idx_t>(out.size());
#pragma omp parallel for schedule(static)
    for (idx_t i = 0; i < n; ++i) out[i] = detail::generator_at(rates, s, f, static_cast<std::size_t>(i));
}

void adjoint_apply(const RateTable& rates, std::span<const double> u, std::span<double> out) {
    const detail::Stencil s(rates.grid);
    const idx_t n = static_cast<idx_t>(out.size());
#pragma omp parallel for schedule(static)
    for (idx_t k = 0; k < n; ++k) out[k] = detail::adjoint_at(rates, s, u, static_cast<std::size_t>(k));
}

void kernel_apply_function(const TransitionKernel& K, std::span<const double> f, std::span<double> out) {
    const detail::Stencil s(K.grid);
    const idx_t n = static_cast<idx_t>(out.size());
#pragma omp parallel for schedule(static)
    for (idx_t i = 0; i < n; ++i) out[i] = detail::kernel_function_at(K, s, f, static_cast<std::size_t>(i));
}

void kernel_apply_measure(const TransitionKernel& K, std::span<const double> nu, std::span<double> out) {
    const detail::Stencil s(K.grid);
    const idx_t n = static_cast<idx_t>(out.size());
#pragma omp parallel for schedule(static)
    for (idx_t k = 0; k < n; ++k) out[k] = detail::kernel_measure_at(K, s, nu, static_cast<std::size_t>(k));
}

KeySums key_inequality_sums(const PairSupport& S, const PhiFamily& phi, std::span<const double> f,
                            std::span<const double> m) {
    const idx_t n = static_cast<idx_t>(S.state_offset.size() - 1);
    std::vector<double> lhs(static_cast<std::size_t>(n)), base(static_cast<std::size_t>(n));
    // Row lengths vary near the boundary, hence dynamic scheduling.
#pragma omp parallel for schedule(dynamic, 16)
    for (idx_t i = 0; i < n; ++i)
        detail::key_at(S, phi, f, m, static_cast<std::size_t>(i), lhs[i], base[i]);
    return KeySums{ordered_sum(lhs), ordered_sum(base)};
}

}  // namespace fpchain::kernels::parallel
