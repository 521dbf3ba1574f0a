#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace fpchain {

/// Smooth confining potential V on R^d.
///
/// Four representations are supported:
///  - additive:   V(x) = sum_j V_j(x_j), each V_j a scalar function (with
///                optional analytic first/second derivatives);
///  - quadratic:  V(x) = 1/2 x^T H x with H symmetric positive definite, so
///                H is the Hessian and its smallest eigenvalue the convexity
///                modulus;
///  - tabulated:  samples on a regular tensor grid over [lo, hi]^d with
///                multilinear interpolation;
///  - callable:   an arbitrary function of x.
///
/// Derivatives missing analytically are taken by central differences with a
/// caller-supplied step.
class Potential {
public:
    enum class Kind { additive, quadratic, tabulated, callable };

    using ScalarFn = std::function<double(double)>;
    using FieldFn = std::function<double(std::span<const double>)>;

    struct AxisTerm {
        ScalarFn value;
        ScalarFn first;   // may be empty
        ScalarFn second;  // may be empty
    };

    static Potential zero(int d);
    static Potential additive(std::vector<AxisTerm> terms,
                              std::optional<double> kappa = std::nullopt);
    /// Additive potential with one polynomial per axis; coeffs[j][k] multiplies x_j^k.
    static Potential additive_polynomial(std::vector<std::vector<double>> coeffs,
                                         std::optional<double> kappa = std::nullopt);
    static Potential quadratic(const Eigen::MatrixXd& hessian);
    static Potential tabulated(int d, double lo, double hi, int points_per_axis,
                               std::vector<double> values,
                               std::optional<double> kappa = std::nullopt);
    static Potential callable(int d, FieldFn fn, std::optional<double> kappa = std::nullopt);

    Kind kind() const { return kind_; }
    int dim() const { return dim_; }
    bool is_additive() const { return kind_ == Kind::additive; }

    /// User-supplied or derived strong-convexity modulus.
    std::optional<double> convexity_modulus() const { return kappa_; }

    double value(std::span<const double> x) const;
    /// Gradient; `fd_step` is used only where no analytic form exists.
    std::vector<double> gradient(std::span<const double> x, double fd_step) const;
    double partial(std::span<const double> x, int axis, double fd_step) const;
    Eigen::MatrixXd hessian(std::span<const double> x, double fd_step) const;

    /// Quadratic kind only.
    const Eigen::MatrixXd& hessian_matrix() const { return quad_; }

private:
    Potential() = default;

    double tabulated_value(std::span<const double> x) const;

    Kind kind_ = Kind::callable;
    int dim_ = 0;
    std::optional<double> kappa_;
    std::vector<AxisTerm> terms_;
    Eigen::MatrixXd quad_;
    FieldFn fn_;
    // tabulated
    double lo_ = 0.0, hi_ = 0.0;
    int points_ = 0;
    std::shared_ptr<const std::vector<double>> table_;
};

/// Gauss-Legendre nodes and weights on [-1, 1].
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

QuadratureRule gauss_legendre(int order);

}  // namespace fpchain
