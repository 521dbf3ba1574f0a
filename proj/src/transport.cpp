#include "fpchain/transport.hpp"

#include "fpchain/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

namespace fpchain {

namespace {

constexpr double kMassScale = 1e12;

std::vector<std::int64_t> integer_masses(std::span<const double> w, double total) {
    const std::size_t n = w.size();
    std::vector<std::int64_t> out(n);
    std::vector<std::pair<double, std::size_t>> frac(n);
    std::int64_t assigned = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = w[i] / total * kMassScale;
        const double fl = std::floor(x);
        out[i] = static_cast<std::int64_t>(fl);
        assigned += out[i];
        frac[i] = {x - fl, i};
    }
    std::int64_t left = static_cast<std::int64_t>(kMassScale) - assigned;
    std::stable_sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t r = 0; left > 0 && r < n; ++r, --left) ++out[frac[r].second];
    return out;
}

// Transportation simplex on an m x n problem with integer supplies/demands
// of equal total. Basis kept as a spanning tree over m + n nodes.
class TransportationSimplex {
public:
    TransportationSimplex(std::vector<std::int64_t> supply, std::vector<std::int64_t> demand,
                          std::vector<double> cost)
        : m_(supply.size()), n_(demand.size()), supply_(std::move(supply)), demand_(std::move(demand)),
          cost_(std::move(cost)) {}

    std::size_t solve() {
        northwest_corner();
        const double cmax = *std::max_element(cost_.begin(), cost_.end());
        const double eps = 1e-12 * std::max(cmax, 1e-300);
        const std::size_t cap = 100 * (m_ + n_) * (m_ + n_) + 1000;
        std::vector<double> u(m_), v(n_);
        std::size_t pivots = 0;
        for (;; ++pivots) {
            if (pivots > cap) throw SolverError("transport simplex exceeded its pivot cap");
            potentials(u, v);
            double best = -eps;
            std::size_t bi = 0, bj = 0;
            bool found = false;
            for (std::size_t i = 0; i < m_; ++i) {
                for (std::size_t j = 0; j < n_; ++j) {
                    const double r = cost_[i * n_ + j] - u[i] - v[j];
                    if (r < best) {
                        best = r;
                        bi = i;
                        bj = j;
                        found = true;
                    }
                }
            }
            if (!found) break;
            pivot(bi, bj);
        }
        return pivots;
    }

    struct Cell {
        std::size_t i, j;
        std::int64_t flow;
    };
    const std::vector<Cell>& basis() const { return basis_; }

private:
    void northwest_corner() {
        std::vector<std::int64_t> s = supply_, d = demand_;
        std::size_t i = 0, j = 0;
        while (i < m_ && j < n_) {
            const std::int64_t f = std::min(s[i], d[j]);
            basis_.push_back({i, j, f});
            s[i] -= f;
            d[j] -= f;
            if (i == m_ - 1 && j == n_ - 1) break;
            // Advance exactly one index so the basis stays a tree of m+n-1 cells.
            if (s[i] == 0 && i + 1 < m_)
                ++i;
            else
                ++j;
        }
    }

    // Adjacency of the tree: node i < m is a row, m + j a column.
    void adjacency(std::vector<std::vector<std::size_t>>& adj) const {
        adj.assign(m_ + n_, {});
        for (std::size_t b = 0; b < basis_.size(); ++b) {
            adj[basis_[b].i].push_back(b);
            adj[m_ + basis_[b].j].push_back(b);
        }
    }

    void potentials(std::vector<double>& u, std::vector<double>& v) const {
        std::vector<std::vector<std::size_t>> adj;
        adjacency(adj);
        std::vector<char> seen(m_ + n_, 0);
        std::vector<std::size_t> stack{0};
        u[0] = 0.0;
        seen[0] = 1;
        while (!stack.empty()) {
            const std::size_t node = stack.back();
            stack.pop_back();
            for (std::size_t b : adj[node]) {
                const Cell& c = basis_[b];
                const double cc = cost_[c.i * n_ + c.j];
                if (node < m_) {
                    if (!seen[m_ + c.j]) {
                        v[c.j] = cc - u[c.i];
                        seen[m_ + c.j] = 1;
                        stack.push_back(m_ + c.j);
                    }
                } else if (!seen[c.i]) {
                    u[c.i] = cc - v[c.j];
                    seen[c.i] = 1;
                    stack.push_back(c.i);
                }
            }
        }
    }

    void pivot(std::size_t ei, std::size_t ej) {
        // Path in the tree from column ej back to row ei.
        std::vector<std::vector<std::size_t>> adj;
        adjacency(adj);
        const std::size_t none = std::numeric_limits<std::size_t>::max();
        std::vector<std::size_t> via(m_ + n_, none), parent(m_ + n_, none);
        std::vector<std::size_t> stack{ei};
        parent[ei] = ei;
        while (!stack.empty()) {
            const std::size_t node = stack.back();
            stack.pop_back();
            if (node == m_ + ej) break;
            for (std::size_t b : adj[node]) {
                const std::size_t other = node < m_ ? m_ + basis_[b].j : basis_[b].i;
                if (parent[other] != none) continue;
                parent[other] = node;
                via[other] = b;
                stack.push_back(other);
            }
        }
        if (parent[m_ + ej] == none) throw SolverError("transport basis is not a spanning tree");
        // Cells on the path from column ej to row ei alternate -, +, -, ...
        std::vector<std::size_t> path;
        for (std::size_t node = m_ + ej; node != ei; node = parent[node]) path.push_back(via[node]);
        std::int64_t theta = std::numeric_limits<std::int64_t>::max();
        std::size_t leave = none;
        for (std::size_t k = 0; k < path.size(); k += 2) {
            if (basis_[path[k]].flow < theta) {
                theta = basis_[path[k]].flow;
                leave = path[k];
            }
        }
        for (std::size_t k = 0; k < path.size(); ++k) basis_[path[k]].flow += (k % 2 == 0) ? -theta : theta;
        basis_[leave] = Cell{ei, ej, theta};
    }

    std::size_t m_, n_;
    std::vector<std::int64_t> supply_, demand_;
    std::vector<double> cost_;
    std::vector<Cell> basis_;
};

double pair_cost(const GridSpec& g, std::size_t a, std::size_t b, CostKind kind, int p) {
    if (kind == CostKind::graph) return graph_distance(g, a, b);
    const double d = euclidean_distance(g, a, b);
    return p == 1 ? d : std::pow(d, p);
}

}  // namespace

TransportResult wasserstein(const TransportProblem& pr) {
    const std::size_t n = pr.grid.num_states();
    if (pr.source.size() != n || pr.target.size() != n) throw InputError("transport: measure size mismatch");
    if (pr.p < 1) throw InputError("transport: p must be >= 1");
    double ms = 0.0, mt = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(pr.source[i] >= 0.0) || !(pr.target[i] >= 0.0)) throw InputError("transport: negative mass");
        ms += pr.source[i];
        mt += pr.target[i];
    }
    if (!(ms > 0.0) || std::abs(ms - mt) > 1e-12 * std::max(ms, mt))
        throw InputError("transport: source and target masses differ");

    const auto a = integer_masses(pr.source.weights, ms);
    const auto b = integer_masses(pr.target.weights, mt);
    std::vector<std::size_t> rows, cols;
    for (std::size_t i = 0; i < n; ++i) {
        if (a[i] > 0) rows.push_back(i);
        if (b[i] > 0) cols.push_back(i);
    }
    std::vector<std::int64_t> supply, demand;
    for (auto i : rows) supply.push_back(a[i]);
    for (auto j : cols) demand.push_back(b[j]);
    std::vector<double> cost(rows.size() * cols.size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < cols.size(); ++c)
            cost[r * cols.size() + c] = pair_cost(pr.grid, rows[r], cols[c], pr.cost, pr.p);

    TransportationSimplex simplex(std::move(supply), std::move(demand), cost);
    TransportResult res;
    res.pivots = simplex.solve();
    long double total = 0.0L;
    for (const auto& cell : simplex.basis()) {
        if (cell.flow == 0) continue;
        const double mass = static_cast<double>(cell.flow) / kMassScale * ms;
        res.plan.push_back(PlanEntry{rows[cell.i], cols[cell.j], mass});
        total += static_cast<long double>(cell.flow) * cost[cell.i * cols.size() + cell.j];
    }
    std::sort(res.plan.begin(), res.plan.end(),
              [](const PlanEntry& x, const PlanEntry& y) { return x.from != y.from ? x.from < y.from : x.to < y.to; });
    res.cost = static_cast<double>(total / static_cast<long double>(kMassScale)) * ms;
    const int p = pr.cost == CostKind::graph ? 1 : pr.p;
    res.value = p == 1 ? res.cost : std::pow(std::max(res.cost, 0.0), 1.0 / p);
    return res;
}

double w1_graph(const GridSpec& grid, const GridMeasure& a, const GridMeasure& b) {
    return wasserstein(TransportProblem{grid, a, b, CostKind::graph, 1}).value;
}

double wp_euclid(const GridSpec& grid, const GridMeasure& a, const GridMeasure& b, int p) {
    return wasserstein(TransportProblem{grid, a, b, CostKind::euclidean, p}).value;
}

std::string to_string(ContractionMode m) {
    switch (m) {
        case ContractionMode::W1_graph: return "W1_graph";
        case ContractionMode::W1_euclid: return "W1_euclid";
        case ContractionMode::W2: return "W2";
        case ContractionMode::Wp_1d: return "Wp_1d";
    }
    return "?";
}

ContractionMode contraction_mode_from_string(const std::string& s) {
    if (s == "W1_graph") return ContractionMode::W1_graph;
    if (s == "W1_euclid") return ContractionMode::W1_euclid;
    if (s == "W2") return ContractionMode::W2;
    if (s == "Wp_1d") return ContractionMode::Wp_1d;
    throw InputError("unknown contraction mode '" + s + "'");
}

namespace {

struct ModeSetup {
    CostKind cost;
    int p;
    double rate;
    double prefactor;
};

ModeSetup setup_mode(const RateTable& rates, ContractionMode mode, double kappa_1, int p) {
    switch (mode) {
        case ContractionMode::W1_graph: return {CostKind::graph, 1, kappa_1, 1.0};
        case ContractionMode::W1_euclid:
            return {CostKind::euclidean, 1, kappa_1, std::sqrt(static_cast<double>(rates.grid.d))};
        case ContractionMode::W2:
        case ContractionMode::Wp_1d: {
            if (!rates.additive)
                throw HypothesisError(to_string(mode) + " contraction needs an additive potential");
            if (!rates.kappa || !(*rates.kappa > 0.0))
                throw HypothesisError(to_string(mode) + " contraction needs a known convexity modulus kappa > 0");
            if (mode == ContractionMode::W2) return {CostKind::euclidean, 2, *rates.kappa, 1.0};
            if (rates.grid.d != 1) throw HypothesisError("Wp_1d contraction needs d = 1");
            if (p < 1) throw InputError("Wp_1d needs p >= 1");
            return {CostKind::euclidean, p, *rates.kappa, 1.0};
        }
    }
    throw InputError("unknown contraction mode");
}

}  // namespace

ContractionReport contraction_report(const RateTable& rates, const GridMeasure& nu, const GridMeasure& eta,
                                     std::span<const double> times, ContractionMode mode, double kappa_1, int p,
                                     double tol) {
    const ModeSetup s = setup_mode(rates, mode, kappa_1, p);
    const TransitionKernel K = build_kernel(rates);
    ContractionReport r;
    r.mode = mode;
    r.p = s.p;
    r.rate = s.rate;
    r.prefactor = s.prefactor;
    auto dist = [&](const GridMeasure& a, const GridMeasure& b) {
        return wasserstein(TransportProblem{rates.grid, a, b, s.cost, s.p}).value;
    };
    r.initial_distance = dist(nu, eta);
    GridMeasure a = nu, b = eta;
    double t_prev = 0.0;
    for (double t : times) {
        if (t < t_prev) throw InputError("contraction times must be nondecreasing and nonnegative");
        a = semigroup_apply(K, a, t - t_prev, tol);
        b = semigroup_apply(K, b, t - t_prev, tol);
        t_prev = t;
        const double dv = dist(a, b);
        const double bound = s.prefactor * std::exp(-s.rate * t) * r.initial_distance;
        r.times.push_back(t);
        r.distance.push_back(dv);
        r.bound.push_back(bound);
        r.excess.push_back(dv - bound);
    }
    return r;
}

ContractionReport contraction_report_discrete(const RateTable& rates, const GridMeasure& nu, const GridMeasure& eta,
                                              std::span<const std::size_t> steps, ContractionMode mode,
                                              double kappa_1, int p) {
    const ModeSetup s = setup_mode(rates, mode, kappa_1, p);
    const TransitionKernel K = build_kernel(rates);
    ContractionReport r;
    r.mode = mode;
    r.p = s.p;
    r.discrete = true;
    r.rate = s.rate;
    r.prefactor = s.prefactor;
    auto dist = [&](const GridMeasure& x, const GridMeasure& y) {
        return wasserstein(TransportProblem{rates.grid, x, y, s.cost, s.p}).value;
    };
    r.initial_distance = dist(nu, eta);
    GridMeasure a = nu, b = eta;
    std::size_t n_prev = 0;
    for (std::size_t n : steps) {
        if (n < n_prev) throw InputError("contraction steps must be nondecreasing");
        for (; n_prev < n; ++n_prev) {
            a = step(K, a);
            b = step(K, b);
        }
        const double dv = dist(a, b);
        const double bound = s.prefactor * std::exp(-s.rate * static_cast<double>(n) * K.tau) * r.initial_distance;
        r.times.push_back(static_cast<double>(n));
        r.distance.push_back(dv);
        r.bound.push_back(bound);
        r.excess.push_back(dv - bound);
    }
    return r;
}

RefinementSweep w2_refinement_sweep(const Potential& V, double sigma, double K, std::span<const double> hs,
                                    const std::function<GridMeasure(const GridSpec&)>& nu,
                                    const std::function<GridMeasure(const GridSpec&)>& eta, double t, int p,
                                    int quadrature_order) {
    RefinementSweep sweep;
    const std::vector<double> times{t};
    for (double h : hs) {
        const GridSpec g = build_grid(V.dim(), K, h);
        const RateTable rates = fv_rates(g, V, sigma, quadrature_order);
        const ContractionMode mode = (p == 2) ? ContractionMode::W2 : ContractionMode::Wp_1d;
        const ContractionReport r = contraction_report(rates, nu(g), eta(g), times, mode, 0.0, p);
        RefinementLevel lvl;
        lvl.h = h;
        lvl.distance = r.distance.front();
        lvl.bound = r.bound.front();
        lvl.excess = r.excess.front();
        lvl.constant = lvl.excess / std::pow(h, 1.0 / p);
        sweep.levels.push_back(lvl);
    }
    for (std::size_t k = 1; k < sweep.levels.size(); ++k)
        sweep.ratios.push_back(sweep.levels[k].excess / sweep.levels[k - 1].excess);
    return sweep;
}

}  // namespace fpchain
