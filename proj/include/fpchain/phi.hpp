#pragma once

namespace fpchain {

/// phi_alpha(x) = (x^alpha - x)/(alpha - 1) - x + 1 for alpha in (1, 2],
/// x log x - x + 1 for alpha = 1. phi_2 is (x - 1)^2.
struct PhiFamily {
    double alpha = 1.0;

    explicit PhiFamily(double a = 1.0);

    double phi(double x) const;
    double dphi(double x) const;
    /// Phi(a, b) = (phi'(a) - phi'(b))(a - b).
    double Phi(double a, double b) const;
};

}  // namespace fpchain
