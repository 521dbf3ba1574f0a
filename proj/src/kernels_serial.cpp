#include "kernels_detail.hpp"

namespace fpchain::kernels::serial {

void generator_apply(const RateTable& rates, std::span<const double> f, std::span<double> out) {
    const detail::Stencil s(rates.grid);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = detail::generator_at(rates, s, f, i);
}

void adjoint_apply(const RateTable& rates, std::span<const double> u, std::span<double> out) {
    const detail::Stencil s(rates.grid);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = detail::adjoint_at(rates, s, u, k);
}

void kernel_apply_function(const TransitionKernel& K, std::span<const double> f, std::span<double> out) {
    const detail::Stencil s(K.grid);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = detail::kernel_function_at(K, s, f, i);
}

void kernel_apply_measure(const TransitionKernel& K, std::span<const double> nu, std::span<double> out) {
    const detail::Stencil s(K.grid);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = detail::kernel_measure_at(K, s, nu, k);
}

KeySums key_inequality_sums(const PairSupport& S, const PhiFamily& phi, std::span<const double> f,
                            std::span<const double> m) {
    const std::size_t n = S.state_offset.size() - 1;
    std::vector<double> lhs(n), base(n);
    for (std::size_t i = 0; i < n; ++i) detail::key_at(S, phi, f, m, i, lhs[i], base[i]);
    return KeySums{ordered_sum(lhs), ordered_sum(base)};
}

}  // namespace fpchain::kernels::serial
