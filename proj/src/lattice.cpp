#include "fpchain/lattice.hpp"

#include "fpchain/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace fpchain {

std::size_t GridSpec::num_states() const {
    std::size_t n = 1;
    for (int j = 0; j < d; ++j) n *= static_cast<std::size_t>(n_per_axis);
    return n;
}

std::size_t GridSpec::stride(int axis) const {
    std::size_t s = 1;
    for (int j = 0; j < axis; ++j) s *= static_cast<std::size_t>(n_per_axis);
    return s;
}

int GridSpec::axis_index(std::size_t flat, int axis) const {
    return static_cast<int>((flat / stride(axis)) % static_cast<std::size_t>(n_per_axis));
}

std::vector<int> GridSpec::multi_index(std::size_t flat) const {
    std::vector<int> idx(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) {
        idx[j] = static_cast<int>(flat % static_cast<std::size_t>(n_per_axis));
        flat /= static_cast<std::size_t>(n_per_axis);
    }
    return idx;
}

std::size_t GridSpec::flat_index(std::span<const int> multi) const {
    std::size_t flat = 0;
    for (int j = d - 1; j >= 0; --j) flat = flat * static_cast<std::size_t>(n_per_axis) + multi[j];
    return flat;
}

double GridSpec::center(std::size_t flat, int axis) const {
    return -K + h * (axis_index(flat, axis) + 0.5);
}

std::vector<double> GridSpec::center(std::size_t flat) const {
    std::vector<double> x(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) {
        x[j] = -K + h * (static_cast<double>(flat % static_cast<std::size_t>(n_per_axis)) + 0.5);
        flat /= static_cast<std::size_t>(n_per_axis);
    }
    return x;
}

GridSpec build_grid(int d, double K, double h) {
    if (d < 1) throw GridError("grid dimension must be >= 1");
    if (!(K > 0.0)) throw GridError("grid half-width K must be positive");
    if (!(h > 0.0)) throw GridError("grid spacing h must be positive");
    const double ratio = 2.0 * K / h;
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-12 * std::max(1.0, ratio))
        throw GridError("2K/h = " + std::to_string(ratio) + " is not a positive integer");
    if (rounded > static_cast<double>(std::numeric_limits<int>::max()))
        throw GridError("too many cells per axis");
    return GridSpec{d, K, h, static_cast<int>(rounded)};
}

std::optional<std::size_t> neighbor(const GridSpec& grid, std::size_t i, Move m) {
    const int n = grid.axis_index(i, m.axis) + m.sign;
    if (n < 0 || n >= grid.n_per_axis) return std::nullopt;
    const std::size_t s = grid.stride(m.axis);
    return m.sign > 0 ? i + s : i - s;
}

std::vector<std::pair<Move, std::size_t>> admissible_moves(const GridSpec& grid, std::size_t i) {
    std::vector<std::pair<Move, std::size_t>> out;
    for (int g = 0; g < num_moves(grid.d); ++g) {
        const Move m = Move::from_index(g);
        if (auto k = neighbor(grid, i, m)) out.emplace_back(m, *k);
    }
    return out;
}

double graph_distance(const GridSpec& grid, std::size_t i, std::size_t k) {
    double dist = 0.0;
    for (int j = 0; j < grid.d; ++j)
        dist += std::abs(grid.axis_index(i, j) - grid.axis_index(k, j));
    return dist * grid.h;
}

double euclidean_distance(const GridSpec& grid, std::size_t i, std::size_t k) {
    double s = 0.0;
    for (int j = 0; j < grid.d; ++j) {
        const double diff = (grid.axis_index(i, j) - grid.axis_index(k, j)) * grid.h;
        s += diff * diff;
    }
    return std::sqrt(s);
}

double cell_average(const Potential& V, const GridSpec& grid, std::size_t i, int order) {
    const QuadratureRule rule = gauss_legendre(order);
    const auto c = grid.center(i);
    const int d = grid.d;
    std::vector<int> counter(static_cast<std::size_t>(d), 0);
    std::vector<double> x(c);
    double acc = 0.0;
    const double half = 0.5 * grid.h;
    while (true) {
        double w = 1.0;
        for (int j = 0; j < d; ++j) {
            x[j] = c[j] + half * rule.nodes[counter[j]];
            w *= 0.5 * rule.weights[counter[j]];
        }
        acc += w * V.value(x);
        int j = 0;
        while (j < d && ++counter[j] == order) counter[j++] = 0;
        if (j == d) break;
    }
    return acc;
}

std::vector<double> cell_averages(const Potential& V, const GridSpec& grid, int order) {
    if (V.dim() != grid.d) throw InputError("potential dimension does not match grid dimension");
    std::vector<double> out(grid.num_states());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = cell_average(V, grid, i, order);
    return out;
}

DiagDominance check_diag_dominance(const Potential& V, const GridSpec& grid) {
    DiagDominance best;
    best.min_gap = std::numeric_limits<double>::infinity();
    const bool constant_hessian = V.kind() == Potential::Kind::quadratic;
    const std::size_t n = constant_hessian ? 1 : grid.num_states();
    for (std::size_t i = 0; i < n; ++i) {
        const auto x = grid.center(i);
        const Eigen::MatrixXd H = V.hessian(x, grid.h / 8.0);
        for (int j = 0; j < grid.d; ++j) {
            double gap = H(j, j);
            for (int l = 0; l < grid.d; ++l)
                if (l != j) gap -= std::abs(H(l, j));
            if (gap < best.min_gap) {
                best.min_gap = gap;
                best.cell = i;
                best.axis = j;
            }
        }
    }
    best.dominant = best.min_gap > 0.0;
    return best;
}

}  // namespace fpchain
