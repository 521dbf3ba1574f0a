#pragma once

// Per-state bodies shared by kernels_serial.cpp and kernels_parallel.cpp.

#include "fpchain/kernels.hpp"
#include "fpchain/numeric.hpp"

#include <vector>

namespace fpchain::kernels::detail {

struct Stencil {
    int d = 1;
    int n = 1;
    std::vector<std::size_t> stride;

    explicit Stencil(const GridSpec& g) : d(g.d), n(g.n_per_axis), stride(static_cast<std::size_t>(g.d)) {
        for (int j = 0; j < d; ++j) stride[j] = g.stride(j);
    }

    // Target of move g from i; returns false if it leaves the grid.
    bool target(std::size_t i, int g, std::size_t& k) const {
        const int j = g / 2;
        const int pos = static_cast<int>((i / stride[j]) % static_cast<std::size_t>(n));
        if (g % 2 == 0) {
            if (pos + 1 >= n) return false;
            k = i + stride[j];
        } else {
            if (pos == 0) return false;
            k = i - stride[j];
        }
        return true;
    }
};

inline double generator_at(const RateTable& t, const Stencil& s, std::span<const double> f, std::size_t i) {
    double acc = 0.0;
    std::size_t k;
    for (int g = 0; g < 2 * s.d; ++g)
        if (s.target(i, g, k)) acc += t.rate(i, g) * (f[k] - f[i]);
    return acc;
}

// (L* u)(k) = sum_g c(gk, g^-1) u(gk) - sum_g c(k, g) u(k)
inline double adjoint_at(const RateTable& t, const Stencil& s, std::span<const double> u, std::size_t k) {
    double inflow = 0.0, outflow = 0.0;
    std::size_t n;
    for (int g = 0; g < 2 * s.d; ++g) {
        if (!s.target(k, g, n)) continue;
        inflow += t.rate(n, g ^ 1) * u[n];
        outflow += t.rate(k, g);
    }
    return inflow - outflow * u[k];
}

inline double kernel_function_at(const TransitionKernel& K, const Stencil& s, std::span<const double> f,
                                 std::size_t i) {
    double acc = K.diag[i] * f[i];
    std::size_t k;
    for (int g = 0; g < 2 * s.d; ++g)
        if (s.target(i, g, k)) acc += K.prob(i, g) * f[k];
    return acc;
}

inline double kernel_measure_at(const TransitionKernel& K, const Stencil& s, std::span<const double> nu,
                                std::size_t k) {
    double acc = K.diag[k] * nu[k];
    std::size_t n;
    for (int g = 0; g < 2 * s.d; ++g)
        if (s.target(k, g, n)) acc += K.prob(n, g ^ 1) * nu[n];
    return acc;
}

inline void key_at(const PairSupport& S, const PhiFamily& phi, std::span<const double> f,
                   std::span<const double> m, std::size_t i, double& lhs, double& base) {
    CompensatedSum l, b;
    for (std::size_t r = S.state_offset[i]; r < S.state_offset[i + 1]; ++r) {
        const double here = phi.Phi(f[i], f[S.row_partner[r]]);
        b.add(S.row_rate[r] * here);
        for (std::size_t q = S.term_offset[r]; q < S.term_offset[r + 1]; ++q) {
            const PairTerm& t = S.terms[q];
            l.add(t.w * (phi.Phi(f[t.a], f[t.b]) - here));
        }
    }
    lhs = l.value() * m[i];
    base = b.value() * m[i];
}

}  // namespace fpchain::kernels::detail
