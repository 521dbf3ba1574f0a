#include "fpchain/chain.hpp"

#include "fpchain/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

namespace fpchain {

std::string to_string(Scheme s) {
    return s == Scheme::finite_volume ? "finite_volume" : "finite_difference";
}

Scheme scheme_from_string(const std::string& s) {
    if (s == "finite_volume") return Scheme::finite_volume;
    if (s == "finite_difference") return Scheme::finite_difference;
    throw InputError("unknown scheme '" + s + "' (expected finite_volume or finite_difference)");
}

GridMeasure uniform_measure(const GridSpec& grid) {
    const std::size_t n = grid.num_states();
    return GridMeasure{std::vector<double>(n, 1.0 / static_cast<double>(n))};
}

GridMeasure point_mass(const GridSpec& grid, std::size_t i) {
    GridMeasure m{std::vector<double>(grid.num_states(), 0.0)};
    m.weights.at(i) = 1.0;
    return m;
}

GridMeasure box_measure(const GridSpec& grid, const std::vector<double>& lo, const std::vector<double>& hi) {
    if (lo.size() != static_cast<std::size_t>(grid.d) || hi.size() != lo.size())
        throw InputError("box measure needs one lower and one upper bound per axis");
    std::vector<double> w(grid.num_states());
    for (std::size_t i = 0; i < w.size(); ++i) {
        double p = 1.0;
        for (int j = 0; j < grid.d; ++j) {
            const double c = grid.center(i, j);
            const double overlap = std::min(hi[j], c + 0.5 * grid.h) - std::max(lo[j], c - 0.5 * grid.h);
            p *= std::max(overlap, 0.0) / grid.h;
        }
        w[i] = p;
    }
    return normalized(std::move(w));
}

GridMeasure normalized(std::vector<double> weights) {
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw InputError("measure has a negative or non-finite weight");
        total += w;
    }
    if (!(total > 0.0)) throw InputError("measure has zero total mass");
    for (double& w : weights) w /= total;
    return GridMeasure{std::move(weights)};
}

double RateTable::exit_rate(std::size_t i) const {
    double s = 0.0;
    for (int g = 0; g < moves(); ++g) s += rate(i, g);
    return s;
}

RateTable fv_rates(const GridSpec& grid, const Potential& V, double sigma, int quadrature_order) {
    if (!(sigma > 0.0)) throw InputError("sigma must be positive");
    RateTable t;
    t.grid = grid;
    t.sigma = sigma;
    t.scheme = Scheme::finite_volume;
    t.additive = V.is_additive();
    t.kappa = V.convexity_modulus();
    t.cell_potential = cell_averages(V, grid, quadrature_order);
    const std::size_t n = grid.num_states();
    t.rates.assign(n * t.moves(), 0.0);
    const double s2 = sigma * sigma;
    const double base = s2 / (grid.h * grid.h);
    for (std::size_t i = 0; i < n; ++i) {
        for (int g = 0; g < t.moves(); ++g) {
            if (auto k = neighbor(grid, i, Move::from_index(g)))
                t.rate(i, g) = base * std::exp(-(t.cell_potential[*k] - t.cell_potential[i]) / (2.0 * s2));
        }
    }
    return t;
}

RateTable fd_rates(const GridSpec& grid, const Potential& V, double sigma) {
    if (!(sigma > 0.0)) throw InputError("sigma must be positive");
    if (V.dim() != grid.d) throw InputError("potential dimension does not match grid dimension");
    RateTable t;
    t.grid = grid;
    t.sigma = sigma;
    t.scheme = Scheme::finite_difference;
    t.additive = V.is_additive();
    t.kappa = V.convexity_modulus();
    const std::size_t n = grid.num_states();
    t.rates.assign(n * t.moves(), 0.0);
    const double s2 = sigma * sigma;
    const double h = grid.h;
    const double ih2 = 1.0 / (h * h);
    for (std::size_t i = 0; i < n; ++i) {
        const auto x = grid.center(i);
        for (int j = 0; j < grid.d; ++j) {
            const double dV = V.partial(x, j, h / 8.0);
            if (s2 - 0.5 * h * std::abs(dV) < 0.0) {
                std::ostringstream msg;
                msg << "finite-difference rates lose positivity at cell " << i << " (center";
                for (double xc : x) msg << ' ' << xc;
                msg << "), axis " << j + 1 << ": sigma^2 = " << s2 << " < h|dV|/2 = " << 0.5 * h * std::abs(dV);
                throw PositivityError(msg.str());
            }
            const bool has_plus = neighbor(grid, i, Move{j, +1}).has_value();
            const bool has_minus = neighbor(grid, i, Move{j, -1}).has_value();
            for (int sign : {+1, -1}) {
                const bool has_target = sign > 0 ? has_plus : has_minus;
                const bool has_opposite = sign > 0 ? has_minus : has_plus;
                double c = 0.0;
                if (has_target) {
                    c = has_opposite ? ih2 * (s2 - sign * h * dV / 2.0) : ih2 * (2.0 * s2 - sign * h * dV);
                }
                if (c < 0.0) {
                    throw PositivityError("finite-difference rate negative at cell " + std::to_string(i) +
                                          ", axis " + std::to_string(j + 1));
                }
                t.rate(i, Move{j, sign}.index()) = c;
            }
        }
    }
    return t;
}

namespace {

GridMeasure gibbs_from_cells(const std::vector<double>& vh, double sigma) {
    const double s2 = sigma * sigma;
    const double vmin = *std::min_element(vh.begin(), vh.end());
    std::vector<double> w(vh.size());
    for (std::size_t i = 0; i < vh.size(); ++i) w[i] = std::exp(-(vh[i] - vmin) / s2);
    return normalized(std::move(w));
}

// Product of per-axis birth-death stationary laws; valid when the rates
// along axis j depend on the j-th coordinate only.
std::optional<GridMeasure> axis_product_measure(const RateTable& t) {
    const GridSpec& g = t.grid;
    const int N = g.n_per_axis;
    std::vector<std::vector<double>> axis(static_cast<std::size_t>(g.d), std::vector<double>(N, 1.0));
    for (int j = 0; j < g.d; ++j) {
        const std::size_t s = g.stride(j);
        for (int n = 0; n + 1 < N; ++n) {
            const double up = t.rate(n * s, Move{j, +1});
            const double down = t.rate((n + 1) * s, Move{j, -1});
            if (!(up > 0.0) || !(down > 0.0)) return std::nullopt;
            axis[j][n + 1] = axis[j][n] * up / down;
        }
    }
    std::vector<double> w(g.num_states());
    for (std::size_t i = 0; i < w.size(); ++i) {
        double p = 1.0;
        for (int j = 0; j < g.d; ++j) p *= axis[j][g.axis_index(i, j)];
        w[i] = p;
    }
    return normalized(std::move(w));
}

}  // namespace

GridMeasure stationary_solve(const RateTable& t) {
    const std::size_t n = t.num_states();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    // A = Q^T, with Q the generator matrix.
    for (std::size_t i = 0; i < n; ++i) {
        for (int g = 0; g < t.moves(); ++g) {
            const double c = t.rate(i, g);
            if (c == 0.0) continue;
            const auto k = neighbor(t.grid, i, Move::from_index(g));
            if (!k) continue;
            A(static_cast<Eigen::Index>(*k), static_cast<Eigen::Index>(i)) += c;
            A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) -= c;
        }
    }
    const Eigen::Index last = static_cast<Eigen::Index>(n) - 1;
    A.row(last).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    b(last) = 1.0;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (lu.rank() < A.rows()) throw SolverError("stationary system is singular (rate table not irreducible)");
    Eigen::VectorXd m = lu.solve(b);
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        double v = m(static_cast<Eigen::Index>(i));
        if (v < 0.0) {
            if (v < -1e-12) throw SolverError("stationary solve produced a negative weight");
            v = 0.0;
        }
        w[i] = v;
    }
    return normalized(std::move(w));
}

GridMeasure invariant_measure(const RateTable& t) {
    if (t.scheme == Scheme::finite_volume && t.cell_potential.size() == t.num_states())
        return gibbs_from_cells(t.cell_potential, t.sigma);
    if (t.additive || t.grid.d == 1) {
        if (auto m = axis_product_measure(t)) return *m;
    }
    return stationary_solve(t);
}

namespace {

double rel_residual(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace

double check_path_independence(const RateTable& t) {
    const GridSpec& g = t.grid;
    double worst = 0.0;
    for (std::size_t i = 0; i < t.num_states(); ++i) {
        for (int j = 0; j < g.d; ++j) {
            for (int l = j + 1; l < g.d; ++l) {
                for (int sj : {+1, -1}) {
                    for (int sl : {+1, -1}) {
                        const Move a{j, sj}, b{l, sl};
                        const auto ia = neighbor(g, i, a);
                        const auto ib = neighbor(g, i, b);
                        if (!ia || !ib) continue;
                        const double lhs = t.rate(i, a) * t.rate(*ia, b);
                        const double rhs = t.rate(i, b) * t.rate(*ib, a);
                        worst = std::max(worst, rel_residual(lhs, rhs));
                    }
                }
            }
        }
    }
    return worst;
}

double check_detailed_balance(const RateTable& t, const GridMeasure& m) {
    if (m.size() != t.num_states()) throw InputError("measure size does not match rate table");
    double worst = 0.0;
    for (std::size_t i = 0; i < t.num_states(); ++i) {
        for (int j = 0; j < t.grid.d; ++j) {
            const auto k = neighbor(t.grid, i, Move{j, +1});
            if (!k) continue;
            worst = std::max(worst, rel_residual(t.rate(i, Move{j, +1}) * m[i], t.rate(*k, Move{j, -1}) * m[*k]));
        }
    }
    return worst;
}

void write_rates_csv(std::ostream& os, const RateTable& t) {
    os << std::setprecision(17);
    os << "# d=" << t.grid.d << " K=" << t.grid.K << " h=" << t.grid.h << " sigma=" << t.sigma
       << " scheme=" << to_string(t.scheme) << " additive=" << (t.additive ? 1 : 0) << '\n';
    os << "flat_index,move,rate\n";
    for (std::size_t i = 0; i < t.num_states(); ++i) {
        for (int g = 0; g < t.moves(); ++g) {
            const Move m = Move::from_index(g);
            os << i << ',' << (m.sign > 0 ? '+' : '-') << m.axis + 1 << ',' << t.rate(i, g) << '\n';
        }
    }
}

RateTable read_rates_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind('#', 0) != 0) throw InputError("rate CSV: missing '#' header line");
    std::map<std::string, std::string> kv;
    {
        std::istringstream hs(line.substr(1));
        std::string tok;
        while (hs >> tok) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos) throw InputError("rate CSV: malformed header token '" + tok + "'");
            kv[tok.substr(0, eq)] = tok.substr(eq + 1);
        }
    }
    for (const char* key : {"d", "K", "h", "sigma", "scheme"})
        if (!kv.count(key)) throw InputError(std::string("rate CSV: header lacks ") + key);
    RateTable t;
    try {
        t.grid = build_grid(std::stoi(kv["d"]), std::stod(kv["K"]), std::stod(kv["h"]));
        t.sigma = std::stod(kv["sigma"]);
    } catch (const std::logic_error&) {
        throw InputError("rate CSV: non-numeric header value");
    }
    t.scheme = scheme_from_string(kv["scheme"]);
    t.additive = kv.count("additive") && kv["additive"] == "1";
    t.rates.assign(t.num_states() * t.moves(), 0.0);

    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#' || line.rfind("flat_index", 0) == 0) continue;
        std::istringstream ls(line);
        std::string a, b, c;
        if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',') || !std::getline(ls, c))
            throw InputError("rate CSV line " + std::to_string(lineno) + ": expected 3 fields");
        std::size_t i;
        int axis;
        double rate;
        try {
            i = std::stoul(a);
            if (b.size() < 2 || (b[0] != '+' && b[0] != '-')) throw std::invalid_argument("move");
            axis = std::stoi(b.substr(1)) - 1;
            rate = std::stod(c);
        } catch (const std::logic_error&) {
            throw InputError("rate CSV line " + std::to_string(lineno) + ": cannot parse '" + line + "'");
        }
        if (i >= t.num_states() || axis < 0 || axis >= t.grid.d)
            throw InputError("rate CSV line " + std::to_string(lineno) + ": index out of range");
        const Move m{axis, b[0] == '+' ? +1 : -1};
        if (!(rate >= 0.0)) throw InputError("rate CSV line " + std::to_string(lineno) + ": negative rate");
        if (rate > 0.0 && !neighbor(t.grid, i, m))
            throw InputError("rate CSV line " + std::to_string(lineno) + ": positive rate on a move leaving the grid");
        t.rate(i, m.index()) = rate;
    }
    return t;
}

}  // namespace fpchain
