// Serial reference vs OpenMP kernels on the coupled quadratic chain.
// Range argument is cells per axis on [-1, 1]^2.

#include "fpchain/chain.hpp"
#include "fpchain/coupling.hpp"
#include "fpchain/evolve.hpp"
#include "fpchain/kernels.hpp"
#include "fpchain/lattice.hpp"
#include "fpchain/potential.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

using namespace fpchain;

namespace {

RateTable chain(std::int64_t n) {
    Eigen::MatrixXd H(2, 2);
    H << 1.0, 0.2, 0.2, 1.0;
    const Potential V = Potential::quadratic(H);
    return fv_rates(build_grid(2, 1.0, 2.0 / static_cast<double>(n)), V, 1.0);
}

std::vector<double> positive_function(std::size_t n) {
    std::mt19937_64 rng(17);
    std::lognormal_distribution<double> dist(0.0, 1.0);
    std::vector<double> f(n);
    for (double& v : f) v = dist(rng);
    return f;
}

template <auto Fn>
void generator(benchmark::State& state) {
    const RateTable r = chain(state.range(0));
    const std::vector<double> f = positive_function(r.num_states());
    std::vector<double> out(f.size());
    for (auto _ : state) {
        Fn(r, f, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.size()));
}

template <auto Fn>
void kernel_measure(benchmark::State& state) {
    const RateTable r = chain(state.range(0));
    const TransitionKernel K = build_kernel(r);
    std::vector<double> nu(r.num_states(), 1.0 / static_cast<double>(r.num_states()));
    std::vector<double> out(nu.size());
    for (auto _ : state) {
        Fn(K, nu, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(nu.size()));
}

template <auto Fn>
void key_sums(benchmark::State& state) {
    const RateTable r = chain(state.range(0));
    const kernels::PairSupport S = build_pair_support(r);
    const GridMeasure m = invariant_measure(r);
    const std::vector<double> f = positive_function(r.num_states());
    const PhiFamily phi(1.5);
    for (auto _ : state) benchmark::DoNotOptimize(Fn(S, phi, f, m.weights));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(S.terms.size()));
}

}  // namespace

BENCHMARK(generator<kernels::serial::generator_apply>)->Name("generator/serial")->RangeMultiplier(4)->Range(16, 256);
BENCHMARK(generator<kernels::parallel::generator_apply>)->Name("generator/parallel")->RangeMultiplier(4)->Range(16, 256);
BENCHMARK(kernel_measure<kernels::serial::kernel_apply_measure>)->Name("kernel_measure/serial")->RangeMultiplier(4)->Range(16, 256);
BENCHMARK(kernel_measure<kernels::parallel::kernel_apply_measure>)->Name("kernel_measure/parallel")->RangeMultiplier(4)->Range(16, 256);
BENCHMARK(key_sums<kernels::serial::key_inequality_sums>)->Name("key_sums/serial")->RangeMultiplier(2)->Range(8, 64);
BENCHMARK(key_sums<kernels::parallel::key_inequality_sums>)->Name("key_sums/parallel")->RangeMultiplier(2)->Range(8, 64);

BENCHMARK_MAIN();
