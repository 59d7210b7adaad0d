#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <vector>

namespace selfcalib {

// Real roots of c1 x + c0.
inline std::vector<double> solve_linear_real(double c1, double c0) {
    if (c1 == 0.0) return {};
    return {-c0 / c1};
}

// Real roots of c2 x^2 + c1 x + c0, computed with the sign-stable form.
inline std::vector<double> solve_quadratic_real(double c2, double c1, double c0) {
    const double scale = std::max({std::abs(c2), std::abs(c1), std::abs(c0)});
    if (scale == 0.0) return {};
    if (std::abs(c2) <= 1e-14 * scale) return solve_linear_real(c1, c0);
    const double disc = c1 * c1 - 4.0 * c2 * c0;
    if (disc < 0.0) return {};
    const double s = std::sqrt(disc);
    const double q = -0.5 * (c1 + std::copysign(s, c1));
    std::vector<double> roots;
    roots.push_back(q / c2);
    if (q != 0.0) {
        roots.push_back(c0 / q);
    } else {
        roots.push_back(0.0);
    }
    return roots;
}

namespace detail {

// Eigenvalues of the companion matrix of x^3 + b x^2 + c x + d; real ones only.
inline std::vector<double> cubic_roots_companion(double b, double c, double d) {
    Eigen::Matrix3d companion;
    companion << 0.0, 0.0, -d,
                 1.0, 0.0, -c,
                 0.0, 1.0, -b;
    Eigen::EigenSolver<Eigen::Matrix3d> es(companion);
    std::vector<double> roots;
    for (int i = 0; i < 3; ++i) {
        const std::complex<double> z = es.eigenvalues()(i);
        if (std::abs(z.imag()) <= 1e-8 * (1.0 + std::abs(z.real()))) roots.push_back(z.real());
    }
    return roots;
}

} // namespace detail

/// Real roots of c3 x^3 + c2 x^2 + c1 x + c0.
///
/// Uses the closed-form trigonometric/Cardano formulas; when the discriminant is
/// within `disc_tol` (relative) of zero the roots are nearly multiple and the
/// computation falls back to companion-matrix eigenvalues. Degenerates gracefully
/// to the quadratic/linear case when the leading coefficients vanish.
inline std::vector<double>
solve_cubic_real(double c3, double c2, double c1, double c0, double disc_tol = 1e-10) {
    const double scale = std::max({std::abs(c3), std::abs(c2), std::abs(c1), std::abs(c0)});
    if (scale == 0.0) return {};
    if (std::abs(c3) <= 1e-12 * scale) return solve_quadratic_real(c2, c1, c0);

    const double b = c2 / c3;
    const double c = c1 / c3;
    const double d = c0 / c3;

    // Depressed form t^3 + p t + q with x = t - b/3.
    const double p = c - b * b / 3.0;
    const double q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    const double disc = -4.0 * p * p * p - 27.0 * q * q;
    const double disc_scale = 4.0 * std::abs(p * p * p) + 27.0 * q * q;

    if (disc_scale == 0.0) return {-b / 3.0}; // triple root

    if (std::abs(disc) < disc_tol * disc_scale) return detail::cubic_roots_companion(b, c, d);

    std::vector<double> roots;
    if (disc > 0.0) {
        // Three distinct real roots (p < 0 here).
        const double m = 2.0 * std::sqrt(-p / 3.0);
        const double arg = std::clamp(3.0 * q / (p * m), -1.0, 1.0);
        const double phi = std::acos(arg);
        for (int k = 0; k < 3; ++k) {
            const double t = m * std::cos((phi - 2.0 * M_PI * k) / 3.0);
            roots.push_back(t - b / 3.0);
        }
    } else {
        // One real root; pick the cube root that avoids cancellation.
        const double s = std::sqrt(q * q / 4.0 + p * p * p / 27.0);
        const double u = std::cbrt(q >= 0.0 ? -q / 2.0 - s : -q / 2.0 + s);
        const double t = (u == 0.0) ? 0.0 : u - p / (3.0 * u);
        roots.push_back(t - b / 3.0);
    }
    return roots;
}

} // namespace selfcalib
