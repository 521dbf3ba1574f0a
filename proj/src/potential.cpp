#include "fpchain/potential.hpp"

#include "fpchain/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace fpchain {

namespace {

double horner(const std::vector<double>& c, double x) {
    double acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
    return acc;
}

std::vector<double> differentiate(const std::vector<double>& c) {
    std::vector<double> out;
    for (std::size_t k = 1; k < c.size(); ++k) out.push_back(static_cast<double>(k) * c[k]);
    return out;
}

double central_first(const Potential::ScalarFn& f, double x, double step) {
    return (f(x + step) - f(x - step)) / (2.0 * step);
}

double central_second(const Potential::ScalarFn& f, double x, double step) {
    return (f(x + step) - 2.0 * f(x) + f(x - step)) / (step * step);
}

}  // namespace

Potential Potential::zero(int d) {
    std::vector<std::vector<double>> coeffs(static_cast<std::size_t>(d), std::vector<double>{0.0});
    return additive_polynomial(std::move(coeffs));
}

Potential Potential::additive(std::vector<AxisTerm> terms, std::optional<double> kappa) {
    if (terms.empty()) throw InputError("additive potential needs at least one axis term");
    for (const auto& t : terms) {
        if (!t.value) throw InputError("additive potential term has no value function");
    }
    Potential p;
    p.kind_ = Kind::additive;
    p.dim_ = static_cast<int>(terms.size());
    p.terms_ = std::move(terms);
    p.kappa_ = kappa;
    return p;
}

Potential Potential::additive_polynomial(std::vector<std::vector<double>> coeffs,
                                         std::optional<double> kappa) {
    std::vector<AxisTerm> terms;
    for (auto& c : coeffs) {
        auto c1 = differentiate(c);
        auto c2 = differentiate(c1);
        terms.push_back(AxisTerm{[c](double x) { return horner(c, x); },
                                 [c1](double x) { return horner(c1, x); },
                                 [c2](double x) { return horner(c2, x); }});
    }
    return additive(std::move(terms), kappa);
}

Potential Potential::quadratic(const Eigen::MatrixXd& hessian) {
    if (hessian.rows() != hessian.cols() || hessian.rows() == 0)
        throw InputError("quadratic potential needs a square, non-empty matrix");
    const double scale = std::max(1.0, hessian.cwiseAbs().maxCoeff());
    if ((hessian - hessian.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw InputError("quadratic potential matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hessian);
    const double lmin = eig.eigenvalues().minCoeff();
    if (!(lmin > 0.0))
        throw InputError("quadratic potential matrix is not positive definite (smallest eigenvalue " +
                         std::to_string(lmin) + ")");
    Potential p;
    p.kind_ = Kind::quadratic;
    p.dim_ = static_cast<int>(hessian.rows());
    p.quad_ = hessian;
    p.kappa_ = lmin;
    return p;
}

Potential Potential::tabulated(int d, double lo, double hi, int points_per_axis,
                               std::vector<double> values, std::optional<double> kappa) {
    if (d < 1 || !(hi > lo) || points_per_axis < 2)
        throw InputError("tabulated potential needs d >= 1, hi > lo and at least 2 points per axis");
    std::size_t expected = 1;
    for (int j = 0; j < d; ++j) expected *= static_cast<std::size_t>(points_per_axis);
    if (values.size() != expected)
        throw InputError("tabulated potential expects " + std::to_string(expected) + " values, got " +
                         std::to_string(values.size()));
    Potential p;
    p.kind_ = Kind::tabulated;
    p.dim_ = d;
    p.lo_ = lo;
    p.hi_ = hi;
    p.points_ = points_per_axis;
    p.table_ = std::make_shared<const std::vector<double>>(std::move(values));
    p.kappa_ = kappa;
    return p;
}

Potential Potential::callable(int d, FieldFn fn, std::optional<double> kappa) {
    if (d < 1 || !fn) throw InputError("callable potential needs d >= 1 and a function");
    Potential p;
    p.kind_ = Kind::callable;
    p.dim_ = d;
    p.fn_ = std::move(fn);
    p.kappa_ = kappa;
    return p;
}

double Potential::tabulated_value(std::span<const double> x) const {
    // Multilinear interpolation; points outside [lo, hi] are clamped.
    const double spacing = (hi_ - lo_) / (points_ - 1);
    std::vector<int> base(static_cast<std::size_t>(dim_));
    std::vector<double> frac(static_cast<std::size_t>(dim_));
    for (int j = 0; j < dim_; ++j) {
        double s = (std::clamp(x[j], lo_, hi_) - lo_) / spacing;
        int b = std::min(static_cast<int>(std::floor(s)), points_ - 2);
        base[j] = b;
        frac[j] = s - b;
    }
    double acc = 0.0;
    const int corners = 1 << dim_;
    for (int c = 0; c < corners; ++c) {
        double w = 1.0;
        std::size_t flat = 0, stride = 1;
        for (int j = 0; j < dim_; ++j) {
            const int bit = (c >> j) & 1;
            w *= bit ? frac[j] : 1.0 - frac[j];
            flat += static_cast<std::size_t>(base[j] + bit) * stride;
            stride *= static_cast<std::size_t>(points_);
        }
        if (w != 0.0) acc += w * (*table_)[flat];
    }
    return acc;
}

double Potential::value(std::span<const double> x) const {
    switch (kind_) {
        case Kind::additive: {
            double v = 0.0;
            for (int j = 0; j < dim_; ++j) v += terms_[j].value(x[j]);
            return v;
        }
        case Kind::quadratic: {
            Eigen::Map<const Eigen::VectorXd> xv(x.data(), dim_);
            return 0.5 * xv.dot(quad_ * xv);
        }
        case Kind::tabulated:
            return tabulated_value(x);
        case Kind::callable:
            return fn_(x);
    }
    return 0.0;
}

double Potential::partial(std::span<const double> x, int axis, double fd_step) const {
    switch (kind_) {
        case Kind::additive: {
            const auto& t = terms_[axis];
            return t.first ? t.first(x[axis]) : central_first(t.value, x[axis], fd_step);
        }
        case Kind::quadratic: {
            Eigen::Map<const Eigen::VectorXd> xv(x.data(), dim_);
            return quad_.row(axis).dot(xv);
        }
        default: {
            std::vector<double> xp(x.begin(), x.end()), xm(x.begin(), x.end());
            xp[axis] += fd_step;
            xm[axis] -= fd_step;
            return (value(xp) - value(xm)) / (2.0 * fd_step);
        }
    }
}

std::vector<double> Potential::gradient(std::span<const double> x, double fd_step) const {
    std::vector<double> g(static_cast<std::size_t>(dim_));
    for (int j = 0; j < dim_; ++j) g[j] = partial(x, j, fd_step);
    return g;
}

Eigen::MatrixXd Potential::hessian(std::span<const double> x, double fd_step) const {
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dim_, dim_);
    switch (kind_) {
        case Kind::additive:
            for (int j = 0; j < dim_; ++j) {
                const auto& t = terms_[j];
                H(j, j) = t.second ? t.second(x[j]) : central_second(t.value, x[j], fd_step);
            }
            return H;
        case Kind::quadratic:
            return quad_;
        default: {
            std::vector<double> y(x.begin(), x.end());
            const double f0 = value(y);
            for (int j = 0; j < dim_; ++j) {
                y[j] = x[j] + fd_step;
                const double fp = value(y);
                y[j] = x[j] - fd_step;
                const double fm = value(y);
                y[j] = x[j];
                H(j, j) = (fp - 2.0 * f0 + fm) / (fd_step * fd_step);
                for (int l = j + 1; l < dim_; ++l) {
                    double s = 0.0;
                    for (int a : {1, -1}) {
                        for (int b : {1, -1}) {
                            y[j] = x[j] + a * fd_step;
                            y[l] = x[l] + b * fd_step;
                            s += a * b * value(y);
                        }
                    }
                    y[j] = x[j];
                    y[l] = x[l];
                    H(j, l) = H(l, j) = s / (4.0 * fd_step * fd_step);
                }
            }
            return H;
        }
    }
}

QuadratureRule gauss_legendre(int order) {
    if (order < 1) throw InputError("quadrature order must be positive");
    QuadratureRule rule;
    rule.nodes.resize(static_cast<std::size_t>(order));
    rule.weights.resize(static_cast<std::size_t>(order));
    const int n = order;
    if (n == 1) {
        rule.nodes[0] = 0.0;
        rule.weights[0] = 2.0;
        return rule;
    }
    // Returns (P_n(x), P_n'(x)) by the three-term recurrence.
    auto legendre = [n](double x) {
        double p0 = 1.0, p1 = x;
        for (int m = 2; m <= n; ++m) {
            const double p2 = ((2.0 * m - 1.0) * x * p1 - (m - 1.0) * p0) / m;
            p0 = p1;
            p1 = p2;
        }
        return std::pair{p1, n * (x * p1 - p0) / (x * x - 1.0)};
    };
    for (int k = 0; k < (n + 1) / 2; ++k) {
        double x = std::cos(std::numbers::pi * (k + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            const auto [p, dp] = legendre(x);
            const double dx = p / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double dp = legendre(x).second;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[k] = -x;
        rule.nodes[n - 1 - k] = x;
        rule.weights[k] = w;
        rule.weights[n - 1 - k] = w;
    }
    return rule;
}

}  // namespace fpchain
