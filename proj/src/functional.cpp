#include "fpchain/functional.hpp"

#include "fpchain/errors.hpp"
#include "fpchain/kernels.hpp"
#include "fpchain/numeric.hpp"

#include <cmath>
#include <iostream>
#include <sstream>

namespace fpchain {

PhiFamily::PhiFamily(double a) : alpha(a) {
    if (!(a >= 1.0 && a <= 2.0)) throw InputError("phi_alpha needs alpha in [1, 2]");
}

double PhiFamily::phi(double x) const {
    if (alpha == 1.0) return (x > 0.0 ? x * std::log(x) : 0.0) - x + 1.0;
    return (std::pow(x, alpha) - x) / (alpha - 1.0) - x + 1.0;
}

double PhiFamily::dphi(double x) const {
    if (alpha == 1.0) return std::log(x);
    return (alpha * std::pow(x, alpha - 1.0) - 1.0) / (alpha - 1.0) - 1.0;
}

double PhiFamily::Phi(double a, double b) const {
    if (a == b) return 0.0;
    return (dphi(a) - dphi(b)) * (a - b);
}

namespace {

void check_sizes(const RateTable& rates, std::size_t n) {
    if (n != rates.num_states()) throw InputError("grid function size does not match the rate table");
}

}  // namespace

GridFunction apply_generator(const RateTable& rates, std::span<const double> f) {
    check_sizes(rates, f.size());
    GridFunction out(f.size());
    kernels::parallel::generator_apply(rates, f, out);
    return out;
}

GridFunction apply_adjoint(const RateTable& rates, std::span<const double> u) {
    check_sizes(rates, u.size());
    GridFunction out(u.size());
    kernels::parallel::adjoint_apply(rates, u, out);
    return out;
}

DirichletPair dirichlet_forms(const RateTable& rates, const GridMeasure& m, std::span<const double> f,
                              std::span<const double> g) {
    check_sizes(rates, f.size());
    check_sizes(rates, g.size());
    check_sizes(rates, m.size());
    const GridFunction Lg = apply_generator(rates, g);
    // scale covers both sums: the generator form cancels at the size of |f| |Lg| m
    CompensatedSum gen, sym, sym_scale, gen_scale;
    for (std::size_t i = 0; i < f.size(); ++i) {
        gen.add(-f[i] * Lg[i] * m[i]);
        double spread = 0.0;
        for (int gm = 0; gm < rates.moves(); ++gm) {
            const auto k = neighbor(rates.grid, i, Move::from_index(gm));
            if (!k) continue;
            const double term = 0.5 * rates.rate(i, gm) * (f[*k] - f[i]) * (g[*k] - g[i]) * m[i];
            sym.add(term);
            sym_scale.add(std::abs(term));
            spread += rates.rate(i, gm) * (std::abs(g[*k]) + std::abs(g[i]));
        }
        gen_scale.add(std::abs(f[i]) * spread * m[i]);
    }
    return DirichletPair{gen.value(), sym.value(), std::max(sym_scale.value(), gen_scale.value())};
}

double dirichlet_form(const RateTable& rates, const GridMeasure& m, std::span<const double> f,
                      std::span<const double> g, double rel_tol) {
    const DirichletPair p = dirichlet_forms(rates, m, f, g);
    const double scale = std::max({p.scale, std::abs(p.generator_form), 1e-300});
    if (std::abs(p.generator_form - p.symmetric_form) > rel_tol * scale) {
        std::ostringstream msg;
        msg << "Dirichlet form evaluations disagree (" << p.generator_form << " vs " << p.symmetric_form
            << "); the chain is not reversible with respect to the given measure";
        throw VerificationError(msg.str());
    }
    return p.generator_form;
}

double phi_entropy(const PhiFamily& phi, std::span<const double> f, const GridMeasure& m) {
    if (f.size() != m.size()) throw InputError("grid function size does not match the measure");
    CompensatedSum mean, avg_phi;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (!(f[i] >= 0.0)) throw InputError("phi-entropy needs nonnegative f (entry " + std::to_string(i) + ")");
        mean.add(f[i] * m[i]);
        avg_phi.add(phi.phi(f[i]) * m[i]);
    }
    return avg_phi.value() - phi.phi(mean.value());
}

double fisher_information(const PhiFamily& phi, const RateTable& rates, const GridMeasure& m,
                          std::span<const double> f, bool floor_at_eps) {
    constexpr double eps = 1e-12;
    GridFunction x(f.begin(), f.end());
    std::size_t floored = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const bool bad = phi.alpha == 1.0 ? !(x[i] > 0.0) : !(x[i] >= 0.0);
        if (!bad) continue;
        if (!floor_at_eps)
            throw InputError("Fisher information needs " + std::string(phi.alpha == 1.0 ? "positive" : "nonnegative") +
                             " f (entry " + std::to_string(i) + ")");
        x[i] = eps;
        ++floored;
    }
    if (floored > 0)
        std::cerr << "warning: fisher_information floored " << floored << " entries at " << eps << '\n';
    GridFunction dphi(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) dphi[i] = phi.dphi(x[i]);
    return dirichlet_form(rates, m, dphi, x);
}

double entropy_production(const PhiFamily& phi, const TransitionKernel& K, const GridMeasure& m,
                          std::span<const double> f) {
    const GridFunction pf = step(K, f);
    return -(phi_entropy(phi, pf, m) - phi_entropy(phi, f, m)) / K.tau;
}

}  // namespace fpchain
