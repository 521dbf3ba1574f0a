#pragma once

// Independent reference computations for the tests. Nothing here calls the
// library's kernels; neighbours are found from multi-indices directly and
// operators are assembled as dense Eigen matrices.

#include "fpchain/chain.hpp"
#include "fpchain/coupling.hpp"
#include "fpchain/phi.hpp"
#include "fpchain/potential.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <vector>

namespace oracle {

using fpchain::GridMeasure;
using fpchain::GridSpec;
using fpchain::RateTable;

// Chains used across the suites.
inline fpchain::Potential flat(int d) { return fpchain::Potential::zero(d); }

inline fpchain::Potential additive_quadratic(int d) {
    return fpchain::Potential::additive_polynomial(std::vector<std::vector<double>>(d, {0.0, 0.0, 0.5}), 1.0);
}

inline fpchain::Potential coupled_quadratic() {
    Eigen::MatrixXd H(2, 2);
    H << 1.0, 0.2, 0.2, 1.0;
    return fpchain::Potential::quadratic(H);
}

inline RateTable fv(int d, double K, double h, const fpchain::Potential& V, double sigma = 1.0) {
    return fpchain::fv_rates(fpchain::build_grid(d, K, h), V, sigma);
}

/// Target of (axis, sign) from flat index i, computed from scratch.
inline std::optional<std::size_t> step(const GridSpec& g, std::size_t i, int axis, int sign) {
    std::size_t stride = 1;
    for (int a = 0; a < axis; ++a) stride *= static_cast<std::size_t>(g.n_per_axis);
    const auto n = static_cast<long>((i / stride) % static_cast<std::size_t>(g.n_per_axis));
    const long t = n + sign;
    if (t < 0 || t >= g.n_per_axis) return std::nullopt;
    return sign > 0 ? i + stride : i - stride;
}

inline int move_of(int axis, int sign) { return 2 * axis + (sign > 0 ? 0 : 1); }

/// Dense generator Q with Q(i,k) = c(i -> k), rows summing to zero.
inline Eigen::MatrixXd generator(const RateTable& r) {
    const auto N = static_cast<Eigen::Index>(r.num_states());
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(N, N);
    for (Eigen::Index i = 0; i < N; ++i)
        for (int a = 0; a < r.grid.d; ++a)
            for (int s : {+1, -1})
                if (auto k = step(r.grid, static_cast<std::size_t>(i), a, s)) {
                    const double c = r.rate(static_cast<std::size_t>(i), move_of(a, s));
                    Q(i, static_cast<Eigen::Index>(*k)) += c;
                    Q(i, i) -= c;
                }
    return Q;
}

/// Gibbs weights exp(-V^h/sigma^2) from closed-form or library cell averages.
inline std::vector<double> gibbs(const std::vector<double>& vh, double sigma) {
    std::vector<double> w(vh.size());
    double z = 0.0;
    for (std::size_t i = 0; i < vh.size(); ++i) z += w[i] = std::exp(-vh[i] / (sigma * sigma));
    for (double& x : w) x /= z;
    return w;
}

/// exp(tQ) for a reversible chain via the symmetrisation D^{1/2} Q D^{-1/2}.
class SpectralSemigroup {
public:
    SpectralSemigroup(const RateTable& r, const std::vector<double>& m) {
        const Eigen::MatrixXd Q = generator(r);
        const auto N = Q.rows();
        sq_ = Eigen::VectorXd(N);
        for (Eigen::Index i = 0; i < N; ++i) sq_(i) = std::sqrt(m[static_cast<std::size_t>(i)]);
        Eigen::MatrixXd S = sq_.asDiagonal() * Q * sq_.cwiseInverse().asDiagonal();
        S = 0.5 * (S + S.transpose());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
        U_ = es.eigenvectors();
        lambda_ = es.eigenvalues();
    }

    Eigen::MatrixXd matrix(double t) const {
        const Eigen::VectorXd e = (t * lambda_).array().exp().matrix();
        return sq_.cwiseInverse().asDiagonal() * U_ * e.asDiagonal() * U_.transpose() * sq_.asDiagonal();
    }

    std::vector<double> measure(const std::vector<double>& nu, double t) const {
        const Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(nu.data(), static_cast<Eigen::Index>(nu.size()));
        const Eigen::VectorXd out = matrix(t).transpose() * v;
        return {out.data(), out.data() + out.size()};
    }

    /// Spectral gap of -Q.
    double gap() const { return -lambda_(lambda_.size() - 2); }

private:
    Eigen::VectorXd sq_;
    Eigen::MatrixXd U_;
    Eigen::VectorXd lambda_;
};

/// kappa_+/- summed from the rate table alone.
inline double kappa(const RateTable& r, std::size_t i, int axis, int sign) {
    const std::size_t k = *step(r.grid, i, axis, sign);
    const int fwd = move_of(axis, sign);
    double v = r.rate(i, fwd) - r.rate(k, fwd);
    for (int a = 0; a < r.grid.d; ++a) {
        if (a == axis) continue;
        for (int s : {+1, -1}) {
            const int g = move_of(a, s);
            v -= std::max(r.rate(k, g) - r.rate(i, g), 0.0);
        }
    }
    return v;
}

/// min over admissible (i, j) of kappa_+(i,j) + kappa_-(i+he_j,j).
inline double kappa_phi(const RateTable& r) {
    double best = INFINITY;
    for (std::size_t i = 0; i < r.num_states(); ++i)
        for (int a = 0; a < r.grid.d; ++a)
            if (auto k = step(r.grid, i, a, +1)) best = std::min(best, kappa(r, i, a, +1) + kappa(r, *k, a, -1));
    return best;
}

/// Quadruple sum of the key inequality from explicit coupling tables.
struct KeySum {
    double lhs = 0.0;
    double base = 0.0;
};

inline KeySum key_sum(const RateTable& r, const std::vector<double>& m, const fpchain::PhiFamily& phi,
                      const std::vector<double>& f) {
    const int d = r.grid.d;
    const int e = 2 * d;
    auto apply = [&](std::size_t x, int g) -> std::size_t {
        if (g == e) return x;
        return *step(r.grid, x, g / 2, g % 2 == 0 ? +1 : -1);
    };
    KeySum out;
    for (std::size_t i = 0; i < r.num_states(); ++i)
        for (int a = 0; a < d; ++a)
            for (int s : {+1, -1}) {
                const double c = r.rate(i, move_of(a, s));
                if (c <= 0.0) continue;
                const std::size_t k = *step(r.grid, i, a, s);
                const fpchain::CouplingTable t = fpchain::neighbor_coupling(r, i, a, s);
                const double base = phi.Phi(f[i], f[k]);
                out.base += c * base * m[i];
                for (int g = 0; g <= e; ++g)
                    for (int gb = 0; gb <= e; ++gb) {
                        const double w = t.at(g, gb);
                        if (w == 0.0) continue;
                        out.lhs += c * w * (phi.Phi(f[apply(i, g)], f[apply(k, gb)]) - base) * m[i];
                    }
            }
    return out;
}

/// W1 in 1D as the integral of |F_nu - F_eta| over cell centers spaced h.
inline double w1_cdf(const std::vector<double>& a, const std::vector<double>& b, double h) {
    double Fa = 0.0, Fb = 0.0, s = 0.0;
    for (std::size_t i = 0; i + 1 < a.size(); ++i) {
        Fa += a[i];
        Fb += b[i];
        s += std::abs(Fa - Fb) * h;
    }
    return s;
}

inline std::vector<double> lognormal(std::size_t n, std::mt19937_64& rng, double spread = 2.0) {
    std::normal_distribution<double> z(0.0, spread);
    std::vector<double> f(n);
    for (double& x : f) x = std::exp(z(rng));
    return f;
}

inline GridMeasure random_measure(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> w(n);
    for (double& x : w) x = u(rng);
    return fpchain::normalized(w);
}

inline double l1(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s;
}

}  // namespace oracle
