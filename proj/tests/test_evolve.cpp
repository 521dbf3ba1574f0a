#include "fpchain/coupling.hpp"
#include "fpchain/errors.hpp"
#include "fpchain/evolve.hpp"
#include "fpchain/functional.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace fpchain;

namespace {

// P(Poisson(lambda) > n) by direct summation of the pmf.
long double poisson_tail(double lambda, std::size_t n) {
    long double p = std::exp(-static_cast<long double>(lambda)), cdf = p;
    for (std::size_t k = 1; k <= n; ++k) {
        p *= lambda / static_cast<long double>(k);
        cdf += p;
    }
    return 1.0L - cdf;
}

std::vector<double> density(const GridMeasure& mu, const GridMeasure& m) {
    std::vector<double> f(mu.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = mu[i] / m[i];
    return f;
}

}  // namespace

TEST(Kernel, FlatOneDimensional) {
    const TransitionKernel K = build_kernel(oracle::fv(1, 1.0, 0.5, oracle::flat(1)));
    EXPECT_EQ(K.uniformization, 16.0);
    EXPECT_EQ(K.tau, 1.0 / 16.0);
    EXPECT_EQ(K.prob(1, 0), 0.25);
    EXPECT_EQ(K.prob(1, 1), 0.25);
    EXPECT_EQ(K.diag[1], 0.5);
    EXPECT_EQ(K.diag[0], 0.75);
}

TEST(Kernel, RowsLazinessRange) {
    for (const RateTable& r : {oracle::fv(2, 1.0, 0.25, oracle::coupled_quadratic()),
                               oracle::fv(1, 1.0, 0.0625, oracle::additive_quadratic(1))}) {
        const TransitionKernel K = build_kernel(r);
        for (std::size_t i = 0; i < K.num_states(); ++i) {
            double s = K.diag[i];
            for (int g = 0; g < K.moves(); ++g) {
                EXPECT_GE(K.prob(i, g), 0.0);
                EXPECT_LE(K.prob(i, g), 0.5);
                s += K.prob(i, g);
            }
            EXPECT_NEAR(s, 1.0, 1e-12);
            EXPECT_GE(K.diag[i], 0.5);
        }
        const GridMeasure m = invariant_measure(r);
        EXPECT_LE(oracle::l1(step(K, m).weights, m.weights), 1e-12);
    }
}

TEST(Kernel, TauOverride) {
    const RateTable r = oracle::fv(1, 1.0, 0.5, oracle::flat(1));
    const TransitionKernel K = build_kernel(r, 0.1);
    EXPECT_TRUE(K.tau_overridden);
    EXPECT_NEAR(K.diag[1], 0.2, 1e-15);
    EXPECT_THROW(build_kernel(r, 0.2), InputError);
}

TEST(Poisson, TruncationIsMinimal) {
    for (double lambda : {0.5, 3.0, 40.0, 400.0})
        for (double tol : {1e-6, 1e-10, 1e-12}) {
            const std::size_t n = poisson_truncation(lambda, tol);
            EXPECT_LT(poisson_tail(lambda, n), tol * 1.0001);
            if (n > 0) {
                EXPECT_GE(poisson_tail(lambda, n - 1), tol * 0.9999);
            }
        }
}

TEST(Semigroup, IdentityAtZeroAndArgumentChecks) {
    const RateTable r = oracle::fv(2, 1.0, 0.25, oracle::coupled_quadratic());
    const TransitionKernel K = build_kernel(r);
    const GridMeasure nu = point_mass(r.grid, 3);
    EXPECT_EQ(semigroup_apply(K, nu, 0.0).weights, nu.weights);
    EXPECT_THROW(semigroup_apply(K, nu, -1.0), InputError);
    EXPECT_THROW(semigroup_apply(K, nu, 1.0, 1e-3), InputError);
    const std::vector<double> one(r.num_states(), 1.0);
    for (double v : semigroup_apply(K, std::span<const double>(one), 0.7)) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(Semigroup, MatchesSpectralOracle) {
    for (const RateTable& r : {oracle::fv(2, 1.0, 0.25, oracle::coupled_quadratic()),
                               oracle::fv(1, 1.0, 0.125, oracle::additive_quadratic(1)),
                               fd_rates(build_grid(1, 1.0, 0.25), oracle::additive_quadratic(1), 1.0)}) {
        const GridMeasure m = invariant_measure(r);
        const oracle::SpectralSemigroup S(r, m.weights);
        const TransitionKernel K = build_kernel(r);
        std::mt19937_64 rng(12);
        for (int trial = 0; trial < 3; ++trial) {
            const GridMeasure nu = oracle::random_measure(r.num_states(), rng);
            for (double t : {0.05, 0.5, 2.0})
                EXPECT_LE(oracle::l1(semigroup_apply(K, nu, t).weights, S.measure(nu.weights, t)), 1e-10);
        }
        const double kphi = decay_certificate(r).kappa_phi;
        const GridMeasure late = semigroup_apply(K, point_mass(r.grid, 0), 50.0 / kphi);
        EXPECT_LE(0.5 * oracle::l1(late.weights, m.weights), 1e-8);
        EXPECT_LE(0.5 * oracle::l1(S.measure(point_mass(r.grid, 0).weights, 50.0 / kphi), m.weights), 1e-8);
    }
}

TEST(Semigroup, ChapmanKolmogorov) {
    const RateTable r = oracle::fv(2, 1.0, 0.25, oracle::coupled_quadratic());
    const TransitionKernel K = build_kernel(r);
    const GridMeasure nu = point_mass(r.grid, 10);
    const GridMeasure direct = semigroup_apply(K, nu, 0.9);
    const GridMeasure split = semigroup_apply(K, semigroup_apply(K, nu, 0.4), 0.5);
    EXPECT_LE(oracle::l1(direct.weights, split.weights), 1e-10);
}

TEST(EntropyCurve, ConstantInitialIsFlat) {
    const RateTable r = oracle::fv(1, 1.0, 0.25, oracle::additive_quadratic(1));
    const std::vector<double> times{0.0, 0.5, 1.0};
    const EntropyCurve c = entropy_decay_curve(build_kernel(r), invariant_measure(r), PhiFamily(1.0),
                                               std::vector<double>(r.num_states(), 1.0), times, 1.0);
    for (double h : c.entropy) EXPECT_NEAR(h, 0.0, 1e-14);
}

TEST(EntropyCurve, BelowBoundAndFittedRate) {
    const RateTable r = oracle::fv(1, 1.0, 0.25, oracle::additive_quadratic(1));
    const GridMeasure m = invariant_measure(r);
    const double kphi = decay_certificate(r).kappa_phi;
    std::vector<double> times;
    for (int k = 0; k < 20; ++k) times.push_back(5.0 / kphi * k / 19.0);
    const std::vector<double> f0 = density(box_measure(r.grid, {0.0}, {1.0}), m);
    const EntropyCurve c = entropy_decay_curve(build_kernel(r), m, PhiFamily(1.0), f0, times, kphi);
    for (std::size_t k = 0; k < times.size(); ++k) {
        EXPECT_LE(c.entropy[k], c.bound[k] + 1e-8);
        if (k) {
            EXPECT_LE(c.entropy[k], c.entropy[k - 1] + 1e-12);
        }
    }
    EXPECT_GE(c.fitted_rate, kphi - 1e-3);
}

TEST(DiscreteDecay, ConstantInitial) {
    const RateTable r = oracle::fv(1, 1.0, 0.25, oracle::additive_quadratic(1));
    const DiscreteDecayReport rep =
        discrete_decay_report(build_kernel(r), r, invariant_measure(r), PhiFamily(2.0),
                              std::vector<double>(r.num_states(), 1.0), 50, decay_certificate(r).kappa_phi);
    EXPECT_TRUE(rep.ok);
    EXPECT_FALSE(rep.c_f.has_value());
    for (double h : rep.curve.entropy) EXPECT_NEAR(h, 0.0, 1e-14);
}

TEST(DiscreteDecay, QuadraticTenThousandSteps) {
    const RateTable r = oracle::fv(1, 1.0, 0.25, oracle::additive_quadratic(1));
    const GridMeasure m = invariant_measure(r);
    const TransitionKernel K = build_kernel(r);
    const DecayCertificate cert = decay_certificate(r);
    std::mt19937_64 rng(13);
    const std::vector<double> f0 = oracle::lognormal(r.num_states(), rng);

    const DiscreteDecayReport two = discrete_decay_report(K, r, m, PhiFamily(2.0), f0, 10000, cert.kappa_phi);
    EXPECT_TRUE(two.ok);
    EXPECT_NEAR(two.c_p, 2.0 / (2.0 * K.tau), 1e-9);
    for (std::size_t n = 0; n < two.curve.entropy.size(); ++n) EXPECT_LE(two.curve.entropy[n], two.curve.bound[n] + 1e-10);
    for (std::size_t n = 1; n < two.fisher.size(); ++n) EXPECT_LE(two.fisher[n], two.fisher[n - 1] + 1e-12);

    const DiscreteDecayReport one =
        discrete_decay_report(K, r, m, PhiFamily(1.0), f0, 10000, cert.kappa_phi, cert.kappa_1);
    EXPECT_TRUE(one.ok);
    EXPECT_GE(one.min_slack_kappa1, -1e-10);
}

TEST(DiscreteDecay, EntropyVanishes) {
    const RateTable r = oracle::fv(1, 1.0, 0.5, oracle::additive_quadratic(1));
    const GridMeasure m = invariant_measure(r);
    const TransitionKernel K = build_kernel(r);
    std::vector<double> f{3.0, 0.5, 0.1, 2.0};
    for (int n = 0; n < 100000; ++n) f = step(K, std::span<const double>(f));
    EXPECT_LE(phi_entropy(PhiFamily(1.0), f, m), 1e-10);
}

TEST(FitRate, RecoversExponent) {
    std::vector<double> x, y;
    for (int k = 0; k < 10; ++k) {
        x.push_back(0.3 * k);
        y.push_back(2.0 * std::exp(-1.7 * 0.3 * k));
    }
    EXPECT_NEAR(fit_exponential_rate(x, y), 1.7, 1e-12);
}
