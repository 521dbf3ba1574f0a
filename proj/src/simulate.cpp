#include "fpchain/simulate.hpp"

#include "fpchain/coupling.hpp"
#include "fpchain/errors.hpp"
#include "fpchain/transport.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace fpchain {

std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t path) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)};
    return std::mt19937_64(seq);
}

namespace {

using idx_t = std::int64_t;

double uniform01(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

// Inverse-CDF sampling from a cumulative table.
std::size_t draw(std::span<const double> cdf, double u) {
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u * cdf.back());
    return std::min(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

std::vector<double> cumulative(std::span<const double> w) {
    std::vector<double> c(w.size());
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) c[i] = (s += w[i]);
    return c;
}

// Per-state cumulative kernel rows over moves then the null move.
struct KernelRows {
    int width = 0;
    std::vector<double> cdf;

    KernelRows(const TransitionKernel& K) : width(K.moves() + 1) {
        cdf.resize(K.num_states() * width);
        for (std::size_t i = 0; i < K.num_states(); ++i) {
            double s = 0.0;
            for (int g = 0; g < K.moves(); ++g) cdf[i * width + g] = (s += K.prob(i, g));
            cdf[i * width + K.moves()] = 1.0;
        }
    }

    int sample(std::size_t i, double u) const {
        const double* row = &cdf[i * width];
        for (int g = 0; g < width - 1; ++g)
            if (u < row[g]) return g;
        return width - 1;
    }
};

std::size_t move_target(const GridSpec& grid, std::size_t i, int g) {
    if (g >= num_moves(grid.d)) return i;
    const auto k = neighbor(grid, i, Move::from_index(g));
    if (!k) throw SolverError("sampled a move leaving the grid");
    return *k;
}

}  // namespace

TrajectoryBatch sample_ctmc(const RateTable& rates, const GridMeasure& initial, const SimConfig& cfg,
                            bool log_jumps) {
    if (!(cfg.horizon >= 0.0)) throw InputError("simulation horizon must be nonnegative");
    const TransitionKernel K = build_kernel(rates);
    const KernelRows rows(K);
    const std::vector<double> init_cdf = cumulative(initial.weights);
    TrajectoryBatch out;
    out.terminal.resize(cfg.n_paths);
    if (log_jumps) out.jumps.resize(cfg.n_paths);
    const idx_t n = static_cast<idx_t>(cfg.n_paths);
#pragma omp parallel for schedule(static)
    for (idx_t p = 0; p < n; ++p) {
        auto rng = path_rng(cfg.seed, static_cast<std::uint64_t>(p));
        std::exponential_distribution<double> hold(K.uniformization);
        std::size_t y = draw(init_cdf, uniform01(rng));
        double t = hold(rng);
        while (t <= cfg.horizon) {
            const int g = rows.sample(y, uniform01(rng));
            if (g < K.moves()) {
                y = move_target(rates.grid, y, g);
                if (log_jumps) out.jumps[p].emplace_back(t, y);
            }
            t += hold(rng);
        }
        out.terminal[p] = y;
    }
    return out;
}

namespace {

// Coupled one-step kernel for neighbouring states, as cumulative rows so a
// partner move can be drawn conditionally on the first.
struct CoupledRows {
    int width = 0;
    std::vector<double> cdf;  // width x width, cumulative along each row
    std::vector<double> row_mass;

    static CoupledRows from(const CouplingTable& c, double tau) {
        CoupledRows r;
        r.width = c.size();
        r.cdf.resize(static_cast<std::size_t>(r.width * r.width));
        r.row_mass.resize(r.width);
        double total = 0.0;
        for (double v : c.entries) total += v * tau;
        for (int g = 0; g < r.width; ++g) {
            double s = 0.0;
            for (int gb = 0; gb < r.width; ++gb) {
                double v = c.at(g, gb) * tau;
                if (g == r.width - 1 && gb == r.width - 1) v = std::max(1.0 - total, 0.0);
                r.cdf[g * r.width + gb] = (s += v);
            }
            r.row_mass[g] = s;
        }
        return r;
    }

    int conditional(int g, double u) const {
        const double* row = &cdf[static_cast<std::size_t>(g * width)];
        const double target = u * row_mass[g];
        for (int gb = 0; gb < width - 1; ++gb)
            if (target < row[gb]) return gb;
        return width - 1;
    }

    // Joint draw (g, gb).
    std::pair<int, int> joint(double u) const {
        double target = u;
        for (int g = 0; g < width; ++g) {
            if (target < row_mass[g] || g == width - 1) {
                const double* row = &cdf[static_cast<std::size_t>(g * width)];
                for (int gb = 0; gb < width - 1; ++gb)
                    if (target < row[gb]) return {g, gb};
                return {g, width - 1};
            }
            target -= row_mass[g];
        }
        return {width - 1, width - 1};
    }
};

class NeighbourGlue {
public:
    NeighbourGlue(const RateTable& rates, const TransitionKernel& K) : grid_(rates.grid), moves_(K.moves()) {
        const std::size_t n = rates.num_states();
        tables_.resize(n * moves_);
        for (std::size_t i = 0; i < n; ++i) {
            for (int g = 0; g < moves_; ++g) {
                const Move m = Move::from_index(g);
                if (!neighbor(grid_, i, m)) continue;
                tables_[i * moves_ + g] = CoupledRows::from(neighbor_coupling(rates, i, m.axis, m.sign), K.tau);
            }
        }
    }

    // Moves for x and y: x's move from its kernel row, then conditional draws
    // along the geodesic x = z0, z1, ..., zL = y.
    std::pair<int, int> step(std::size_t x, std::size_t y, const KernelRows& rows, std::mt19937_64& rng) const {
        int g = rows.sample(x, uniform01(rng));
        if (x == y) return {g, g};
        std::size_t z = x;
        const int g0 = g;
        for (int j = 0; j < grid_.d; ++j) {
            const int target = grid_.axis_index(y, j);
            while (grid_.axis_index(z, j) != target) {
                const int sign = target > grid_.axis_index(z, j) ? +1 : -1;
                const int mv = Move{j, sign}.index();
                g = tables_[z * moves_ + mv].conditional(g, uniform01(rng));
                z = sign > 0 ? z + grid_.stride(j) : z - grid_.stride(j);
            }
        }
        return {g0, g};
    }

private:
    GridSpec grid_;
    int moves_;
    std::vector<CoupledRows> tables_;
};

double least_squares_rate(std::span<const double> t, std::span<const double> y) {
    return fit_exponential_rate(t, y);
}

}  // namespace

CoupledRun sample_coupled_pair(CouplingSource source, const RateTable& rates, const GridMeasure& nu,
                               const GridMeasure& eta, const SimConfig& cfg, std::span<const double> obs_times) {
    if (obs_times.empty()) throw InputError("coupled simulation needs observation times");
    for (std::size_t k = 1; k < obs_times.size(); ++k)
        if (obs_times[k] < obs_times[k - 1]) throw InputError("observation times must be nondecreasing");
    const TransitionKernel K = build_kernel(rates);
    const KernelRows rows(K);
    const GridSpec& grid = rates.grid;
    const int e = null_move_index(grid.d);

    std::optional<NeighbourGlue> glue;
    if (source == CouplingSource::neighbor) glue.emplace(rates, K);

    const TransportResult plan = wasserstein(TransportProblem{grid, nu, eta, CostKind::graph, 1});
    std::vector<double> plan_w;
    for (const auto& pe : plan.plan) plan_w.push_back(pe.mass);
    const std::vector<double> plan_cdf = cumulative(plan_w);

    const std::size_t n_obs = obs_times.size();
    const std::size_t n_paths = cfg.n_paths;
    std::vector<double> dist(n_paths * n_obs);
    CoupledRun out;
    out.terminal_first.resize(n_paths);
    out.terminal_second.resize(n_paths);
    const idx_t np = static_cast<idx_t>(n_paths);
#pragma omp parallel for schedule(static)
    for (idx_t p = 0; p < np; ++p) {
        auto rng = path_rng(cfg.seed, static_cast<std::uint64_t>(p));
        std::exponential_distribution<double> hold(K.uniformization);
        const PlanEntry& start = plan.plan[draw(plan_cdf, uniform01(rng))];
        std::size_t x = start.from, y = start.to;
        double t = hold(rng);
        for (std::size_t o = 0; o < n_obs; ++o) {
            while (t <= obs_times[o]) {
                int gx, gy;
                if (glue) {
                    std::tie(gx, gy) = glue->step(x, y, rows, rng);
                } else {
                    const CoupledRows c = CoupledRows::from(product_coupling(rates, x, y), K.tau);
                    std::tie(gx, gy) = c.joint(uniform01(rng));
                }
                if (gx != e) x = move_target(grid, x, gx);
                if (gy != e) y = move_target(grid, y, gy);
                t += hold(rng);
            }
            dist[static_cast<std::size_t>(p) * n_obs + o] = graph_distance(grid, x, y);
        }
        out.terminal_first[p] = x;
        out.terminal_second[p] = y;
    }

    out.times.assign(obs_times.begin(), obs_times.end());
    out.mean_distance.assign(n_obs, 0.0);
    out.stderr_distance.assign(n_obs, 0.0);
    for (std::size_t o = 0; o < n_obs; ++o) {
        double s = 0.0, s2 = 0.0;
        for (std::size_t p = 0; p < n_paths; ++p) {
            const double v = dist[p * n_obs + o];
            s += v;
            s2 += v * v;
        }
        const double mean = s / static_cast<double>(n_paths);
        const double var = n_paths > 1 ? (s2 - s * mean) / static_cast<double>(n_paths - 1) : 0.0;
        out.mean_distance[o] = mean;
        out.stderr_distance[o] = std::sqrt(std::max(var, 0.0) / static_cast<double>(n_paths));
    }
    out.fitted_rate = least_squares_rate(out.times, out.mean_distance);

    constexpr std::size_t batches = 20;
    if (n_paths >= batches) {
        std::vector<double> rates_b;
        const std::size_t per = n_paths / batches;
        for (std::size_t b = 0; b < batches; ++b) {
            std::vector<double> mean(n_obs, 0.0);
            for (std::size_t p = b * per; p < (b + 1) * per; ++p)
                for (std::size_t o = 0; o < n_obs; ++o) mean[o] += dist[p * n_obs + o] / static_cast<double>(per);
            const double r = least_squares_rate(out.times, mean);
            if (std::isfinite(r)) rates_b.push_back(r);
        }
        if (rates_b.size() >= 2) {
            double m = 0.0;
            for (double r : rates_b) m += r;
            m /= static_cast<double>(rates_b.size());
            double v = 0.0;
            for (double r : rates_b) v += (r - m) * (r - m);
            v /= static_cast<double>(rates_b.size() - 1);
            out.rate_stderr = std::sqrt(v / static_cast<double>(rates_b.size()));
        }
    }
    return out;
}

double reflect_into(double x, double K) {
    // Repeated folding handles steps longer than the box.
    for (int it = 0; it < 64; ++it) {
        if (x > K)
            x = 2.0 * K - x;
        else if (x < -K)
            x = -2.0 * K - x;
        else
            return x;
    }
    return std::clamp(x, -K, K);
}

SdeBatch sample_reflected_sde(const Potential& V, double sigma, double K, const InitialSampler& initial,
                              const SimConfig& cfg) {
    if (!(sigma > 0.0) || !(K > 0.0) || !(cfg.sde_step > 0.0) || !(cfg.horizon >= 0.0))
        throw InputError("reflected SDE needs sigma, K, step > 0 and horizon >= 0");
    const int d = V.dim();
    SdeBatch out;
    out.d = d;
    out.terminal.resize(cfg.n_paths * static_cast<std::size_t>(d));
    const std::size_t steps = static_cast<std::size_t>(std::ceil(cfg.horizon / cfg.sde_step - 1e-9));
    const double dt = steps > 0 ? cfg.horizon / static_cast<double>(steps) : 0.0;
    const double noise = std::sqrt(2.0 * sigma * sigma * dt);
    const idx_t n = static_cast<idx_t>(cfg.n_paths);
    int bad_dimension = 0;
#pragma omp parallel for schedule(static) reduction(| : bad_dimension)
    for (idx_t p = 0; p < n; ++p) {
        auto rng = path_rng(cfg.seed, static_cast<std::uint64_t>(p));
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::vector<double> x = initial(rng);
        if (static_cast<int>(x.size()) != d) {
            bad_dimension = 1;
            continue;
        }
        for (double& xi : x) xi = reflect_into(xi, K);
        std::vector<double> grad(static_cast<std::size_t>(d));
        for (std::size_t s = 0; s < steps; ++s) {
            for (int j = 0; j < d; ++j) grad[j] = V.partial(x, j, 1e-6);
            for (int j = 0; j < d; ++j) x[j] = reflect_into(x[j] - grad[j] * dt + noise * gauss(rng), K);
        }
        std::copy(x.begin(), x.end(), out.terminal.begin() + p * d);
    }
    if (bad_dimension) throw InputError("initial sampler returned the wrong dimension");
    return out;
}

GridMeasure empirical_law(const GridSpec& grid, std::span<const std::size_t> states) {
    std::vector<double> w(grid.num_states(), 0.0);
    for (std::size_t s : states) w.at(s) += 1.0;
    return normalized(std::move(w));
}

GridMeasure bin_to_grid(const GridSpec& grid, const SdeBatch& batch) {
    if (batch.d != grid.d) throw InputError("SDE batch dimension does not match the grid");
    std::vector<double> w(grid.num_states(), 0.0);
    const std::size_t n = batch.terminal.size() / static_cast<std::size_t>(batch.d);
    std::vector<int> idx(static_cast<std::size_t>(grid.d));
    for (std::size_t p = 0; p < n; ++p) {
        for (int j = 0; j < grid.d; ++j) {
            const double x = batch.terminal[p * batch.d + j];
            int b = static_cast<int>(std::floor((x + grid.K) / grid.h));
            idx[j] = std::clamp(b, 0, grid.n_per_axis - 1);
        }
        w[grid.flat_index(idx)] += 1.0;
    }
    return normalized(std::move(w));
}

double total_variation(const GridMeasure& a, const GridMeasure& b) {
    if (a.size() != b.size()) throw InputError("total_variation: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return 0.5 * s;
}

InitialSampler uniform_box_sampler(std::vector<double> lo, std::vector<double> hi) {
    if (lo.size() != hi.size() || lo.empty()) throw InputError("box sampler needs matching bounds");
    return [lo = std::move(lo), hi = std::move(hi)](std::mt19937_64& rng) {
        std::vector<double> x(lo.size());
        for (std::size_t j = 0; j < lo.size(); ++j) x[j] = lo[j] + (hi[j] - lo[j]) * uniform01(rng);
        return x;
    };
}

}  // namespace fpchain
