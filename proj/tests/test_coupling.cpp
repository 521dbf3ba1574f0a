#include "fpchain/coupling.hpp"
#include "fpchain/errors.hpp"
#include "fpchain/functional.hpp"
#include "oracles.hpp"

#include <json.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace fpchain;

namespace {

constexpr int kPlus = 0;

RateTable coupled8() { return oracle::fv(2, 1.0, 0.25, oracle::coupled_quadratic()); }

}  // namespace

TEST(Kappa, FlatPotentialIsZero) {
    const RateTable r = oracle::fv(2, 1.0, 0.5, oracle::flat(2));
    EXPECT_EQ(kappa_pm(r, 5, 0, +1), 0.0);
    const DecayCertificate c = decay_certificate(r);
    EXPECT_EQ(c.kappa_phi, 0.0);
    EXPECT_FALSE(c.a3_satisfied);
    EXPECT_EQ(c.kappa_dd, 0.0);
}

TEST(Kappa, OneDimensionalClosedForm) {
    // K = 1.25: cell 2 sits at the origin with an interior right neighbour
    const double h = 0.5;
    const RateTable r = oracle::fv(1, 1.25, h, oracle::additive_quadratic(1));
    const double expect = r.rate(2, kPlus) * (1.0 - std::exp(-h * h / 2.0));
    EXPECT_NEAR(kappa_pm(r, 2, 0, +1), expect, 1e-12);
    EXPECT_NEAR(kappa_pm(r, 2, 0, +1), 0.441536, 1e-6);
    EXPECT_THROW(kappa_pm(r, 4, 0, +1), InputError);
}

TEST(Kappa, AdditiveReducesToOneDimension) {
    const RateTable r2 = oracle::fv(2, 1.0, 0.25, oracle::additive_quadratic(2));
    const RateTable r1 = oracle::fv(1, 1.0, 0.25, oracle::additive_quadratic(1));
    for (std::size_t i = 0; i < r2.num_states(); ++i)
        for (int a = 0; a < 2; ++a)
            for (int s : {+1, -1})
                if (oracle::step(r2.grid, i, a, s)) {
                    const std::size_t i1 = static_cast<std::size_t>(r2.grid.axis_index(i, a));
                    EXPECT_NEAR(kappa_pm(r2, i, a, s), kappa_pm(r1, i1, 0, s), 1e-12);
                    EXPECT_GT(kappa_pm(r2, i, a, s), 0.0);
                }
}

TEST(Kappa, MatchesIndependentResummation) {
    for (const RateTable& r : {coupled8(), oracle::fv(2, 1.0, 0.125, oracle::coupled_quadratic(), 0.9)}) {
        for (std::size_t i = 0; i < r.num_states(); ++i)
            for (int a = 0; a < 2; ++a)
                for (int s : {+1, -1})
                    if (oracle::step(r.grid, i, a, s)) {
                        EXPECT_NEAR(kappa_pm(r, i, a, s), oracle::kappa(r, i, a, s), 1e-12);
                    }
        const DecayCertificate c = decay_certificate(r);
        EXPECT_TRUE(c.a3_satisfied);
        EXPECT_GT(c.kappa_phi, 0.0);
        EXPECT_NEAR(c.kappa_phi, oracle::kappa_phi(r), 1e-12);
        EXPECT_EQ(c.kappa_1, c.kappa_phi);
        EXPECT_NEAR(c.lsi_constant, 2.0 * c.kappa_phi, 1e-15);
        EXPECT_NEAR(c.beckner.at(1.5), 1.5 * c.kappa_phi, 1e-15);
        EXPECT_NEAR(c.coarse_ricci, c.kappa_1 * c.tau, 1e-15);
    }
}

TEST(Kappa, ApproachesConvexityModulus) {
    double prev = INFINITY;
    for (double h : {0.5, 0.25, 0.125, 0.0625}) {
        const double gap = std::abs(decay_certificate(oracle::fv(1, 1.0, h, oracle::additive_quadratic(1))).kappa_phi - 1.0);
        EXPECT_LT(gap, prev);
        prev = gap;
    }
    EXPECT_LT(prev, 1e-3);
}

TEST(NeighborCoupling, MarginalsAndKappaEntries) {
    const RateTable r = coupled8();
    const int e = 4;
    double kphi = INFINITY;
    for (std::size_t i = 0; i < r.num_states(); ++i)
        for (int a = 0; a < 2; ++a) {
            const auto k = oracle::step(r.grid, i, a, +1);
            if (!k) continue;
            const CouplingTable t = neighbor_coupling(r, i, a, +1);
            for (int g = 0; g < 4; ++g) {
                EXPECT_NEAR(t.row_sum(g), r.rate(i, g), 1e-14);
                EXPECT_NEAR(t.col_sum(g), r.rate(*k, g), 1e-14);
            }
            for (double w : t.entries) EXPECT_GE(w, 0.0);
            EXPECT_NEAR(t.at(2 * a, e), oracle::kappa(r, i, a, +1), 1e-12);
            EXPECT_NEAR(t.at(e, 2 * a + 1), oracle::kappa(r, *k, a, -1), 1e-12);
            kphi = std::min(kphi, t.at(2 * a, e) + t.at(e, 2 * a + 1));

            // matched mass by enumeration of (g, gb) with g i = gb k
            double matched = 0.0;
            auto apply = [&](std::size_t x, int g) { return g == e ? std::optional<std::size_t>(x) : oracle::step(r.grid, x, g / 2, g % 2 ? -1 : +1); };
            for (int g = 0; g <= e; ++g)
                for (int gb = 0; gb <= e; ++gb) {
                    const auto x = apply(i, g), y = apply(*k, gb);
                    if (t.at(g, gb) > 0.0 && x && y && *x == *y) matched += t.at(g, gb);
                }
            EXPECT_NEAR(matched_mass(r, t), matched, 1e-13);
            EXPECT_NEAR(matched, oracle::kappa(r, i, a, +1) + oracle::kappa(r, *k, a, -1), 1e-12);

            // the mirrored table is the transpose of the forward table at the partner
            const CouplingTable back = neighbor_coupling(r, *k, a, -1);
            for (int g = 0; g <= e; ++g)
                for (int gb = 0; gb <= e; ++gb) EXPECT_EQ(back.at(g, gb), t.at(gb, g));
        }
    EXPECT_NEAR(kphi, decay_certificate(r).kappa_phi, 1e-12);
}

TEST(NeighborCoupling, AdditiveSimplifiedTable) {
    const RateTable r = oracle::fv(1, 1.0, 0.25, oracle::additive_quadratic(1));
    for (std::size_t i = 0; i + 1 < r.num_states(); ++i) {
        const CouplingTable t = neighbor_coupling(r, i, 0, +1);
        EXPECT_NEAR(t.at(0, 2), r.rate(i, 0) - r.rate(i + 1, 0), 1e-14);
        EXPECT_NEAR(t.at(2, 1), r.rate(i + 1, 1) - r.rate(i, 1), 1e-14);
    }
}

TEST(NeighborCoupling, RejectsFailedAssumption) {
    const RateTable r = oracle::fv(1, 1.0, 0.5, Potential::additive_polynomial({{0.0, 0.0, -0.5}}));
    EXPECT_THROW(neighbor_coupling(r, 1, 0, +1), AssumptionError);
    EXPECT_NO_THROW(neighbor_coupling(r, 1, 0, +1, true));
    EXPECT_THROW(build_pair_support(r), AssumptionError);
}

TEST(ProductCoupling, SynchronousAndMarginals) {
    const RateTable r = coupled8();
    const int e = 4;
    const CouplingTable same = product_coupling(r, 9, 9);
    for (int g = 0; g <= e; ++g)
        for (int gb = 0; gb <= e; ++gb)
            EXPECT_EQ(same.at(g, gb), (g == gb && g < e) ? r.rate(9, g) : 0.0);

    std::mt19937_64 rng(8);
    std::uniform_int_distribution<std::size_t> pick(0, r.num_states() - 1);
    for (int t = 0; t < 100; ++t) {
        const std::size_t i = pick(rng), k = pick(rng);
        const CouplingTable c = product_coupling(r, i, k);
        for (int g = 0; g < e; ++g) {
            EXPECT_EQ(c.at(g, g) + c.at(g, e), r.rate(i, g));
            EXPECT_EQ(c.at(g, g) + c.at(e, g), r.rate(k, g));
        }
    }

    const RateTable z = oracle::fv(2, 1.0, 0.5, oracle::flat(2));
    const CouplingTable n = product_coupling(z, 5, 6);
    for (int g = 0; g < e; ++g) {
        EXPECT_EQ(n.at(g, g), 4.0);
        EXPECT_EQ(n.at(g, e), 0.0);
        EXPECT_EQ(n.at(e, g), 0.0);
    }
}

TEST(KeyInequality, ConstantFunctionIsTight) {
    const RateTable r = coupled8();
    const kernels::PairSupport S = build_pair_support(r);
    const GridMeasure m = invariant_measure(r);
    const auto res = verify_key_inequality(S, m, PhiFamily(1.0), std::vector<double>(r.num_states(), 2.0),
                                           decay_certificate(r).kappa_phi);
    EXPECT_EQ(res.lhs, 0.0);
    EXPECT_EQ(res.rhs_bound, 0.0);
}

TEST(KeyInequality, AgreesWithExplicitQuadrupleSum) {
    const RateTable r = coupled8();
    const kernels::PairSupport S = build_pair_support(r);
    const GridMeasure m = invariant_measure(r);
    const double kphi = decay_certificate(r).kappa_phi;
    std::mt19937_64 rng(9);
    for (double a : {1.0, 1.5, 2.0}) {
        const PhiFamily phi(a);
        for (int t = 0; t < 10; ++t) {
            const std::vector<double> f = oracle::lognormal(r.num_states(), rng);
            const auto res = verify_key_inequality(S, m, phi, f, kphi);
            const oracle::KeySum ref = oracle::key_sum(r, m.weights, phi, f);
            EXPECT_NEAR(res.lhs, ref.lhs, 1e-9 * ref.base);
            EXPECT_NEAR(res.rhs_bound, -kphi * ref.base, 1e-12 * ref.base);
            EXPECT_GE(res.slack, -1e-10);
        }
    }
}

TEST(KeyInequality, ExhaustiveFourCellSweep) {
    const RateTable r = oracle::fv(1, 1.0, 0.5, oracle::additive_quadratic(1));
    const kernels::PairSupport S = build_pair_support(r);
    const GridMeasure m = invariant_measure(r);
    const double kphi = decay_certificate(r).kappa_phi;
    const double levels[] = {0.5, 1.0, 2.0};
    int count = 0;
    for (double a : {1.0, 1.5, 2.0})
        for (int code = 0; code < 81; ++code) {
            std::vector<double> f(4);
            for (int c = code, p = 0; p < 4; ++p, c /= 3) f[p] = levels[c % 3];
            EXPECT_GE(verify_key_inequality(S, m, PhiFamily(a), f, kphi).slack, -1e-10);
            ++count;
        }
    EXPECT_EQ(count, 243);
}

TEST(CouplingConditions, OneDimensionalInfimumAndMatchedMass) {
    const RateTable r = oracle::fv(1, 1.0, 0.25, oracle::additive_quadratic(1));
    double dd = INFINITY;
    for (std::size_t i = 0; i + 1 < r.num_states(); ++i)
        dd = std::min({dd, oracle::kappa(r, i, 0, +1), oracle::kappa(r, i + 1, 0, -1)});
    const CouplingInfima c = verify_coupling_conditions(r);
    EXPECT_NEAR(c.kappa_dd, dd, 1e-12);
    EXPECT_GE(c.kappa_ddd, oracle::kappa_phi(r) - 1e-12);
    EXPECT_TRUE(c.ddd_at_least_kappa_phi);
}

TEST(CouplingConditions, TwoDimensionalMatchedMass) {
    const RateTable r = coupled8();
    const CouplingInfima c = verify_coupling_conditions(r);
    EXPECT_GE(c.kappa_ddd, decay_certificate(r).kappa_phi - 1e-12);
    EXPECT_THROW(verify_coupling_conditions(oracle::fv(2, 1.0, 0.5, oracle::flat(2))), AssumptionError);
}

TEST(ConvexSobolev, RandomPositiveFunctions) {
    std::mt19937_64 rng(10);
    for (const RateTable& r : {coupled8(), oracle::fv(1, 1.0, 0.125, oracle::additive_quadratic(1))}) {
        const GridMeasure m = invariant_measure(r);
        const double kphi = decay_certificate(r).kappa_phi;
        for (double a : {1.0, 1.5, 2.0}) {
            const PhiFamily phi(a);
            for (int t = 0; t < 50; ++t) {
                const std::vector<double> f = oracle::lognormal(r.num_states(), rng);
                EXPECT_LE(kphi * phi_entropy(phi, f, m), fisher_information(phi, r, m, f) + 1e-10);
            }
        }
    }
}

TEST(Certificate, JsonKeys) {
    const DecayCertificate c = decay_certificate(coupled8(), {1.5, 2.0});
    const auto j = nlohmann::json::parse(certificate_json(c));
    for (const char* key : {"kappa_phi", "kappa_1", "lsi", "beckner", "a3", "coarse_ricci", "min_gap_location"})
        EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_TRUE(j["a3"].get<bool>());
    EXPECT_EQ(j["beckner"].size(), 2u);
    EXPECT_EQ(j["min_gap_location"]["center"].size(), 2u);
}
