#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "selfcalib/cubic.hpp"
#include "selfcalib/errors.hpp"

namespace selfcalib {

/// A pair of image points observed in two views, stored homogeneous with the
/// third coordinate exactly 1.
struct Correspondence {
    Eigen::Vector3d q;       // first view
    Eigen::Vector3d q_prime; // second view

    Correspondence() : q(0, 0, 1), q_prime(0, 0, 1) {}
    Correspondence(double x1, double y1, double x2, double y2)
        : q(x1, y1, 1.0), q_prime(x2, y2, 1.0) {}
    Correspondence(const Eigen::Vector2d& p1, const Eigen::Vector2d& p2)
        : q(p1.x(), p1.y(), 1.0), q_prime(p2.x(), p2.y(), 1.0) {}
};

/// Similarity S = [[g,0,alpha],[0,g,beta],[0,0,1]] that centers the pooled
/// points of both views and scales their mean radius to sqrt(2).
struct NormalizationTransform {
    Eigen::Matrix3d S = Eigen::Matrix3d::Identity();

    double gamma() const { return S(0, 0); }
    Eigen::Matrix3d inverse() const {
        Eigen::Matrix3d inv = Eigen::Matrix3d::Identity();
        const double g = S(0, 0);
        inv(0, 0) = inv(1, 1) = 1.0 / g;
        inv(0, 2) = -S(0, 2) / g;
        inv(1, 2) = -S(1, 2) / g;
        return inv;
    }
};

struct FundamentalMatrix {
    Eigen::Matrix3d F = Eigen::Matrix3d::Zero();
};

namespace detail {

// Frobenius norm 1, largest-magnitude entry positive.
inline Eigen::Matrix3d normalize_scale_sign(Eigen::Matrix3d m) {
    const double norm = m.norm();
    if (norm == 0.0) throw DegenerateError("cannot normalize a zero matrix");
    m /= norm;
    int r = 0, c = 0;
    m.cwiseAbs().maxCoeff(&r, &c);
    if (m(r, c) < 0.0) m = -m;
    return m;
}

// One row of the design matrix for q'^T F q = 0, F flattened row-major.
inline Eigen::Matrix<double, 1, 9> epipolar_row(const Correspondence& c) {
    Eigen::Matrix<double, 1, 9> row;
    const auto& q = c.q;
    const auto& r = c.q_prime;
    row << r(0) * q(0), r(0) * q(1), r(0), r(1) * q(0), r(1) * q(1), r(1), q(0), q(1), 1.0;
    return row;
}

inline Eigen::Matrix3d unflatten(const Eigen::Matrix<double, 9, 1>& v) {
    Eigen::Matrix3d m;
    m << v(0), v(1), v(2), v(3), v(4), v(5), v(6), v(7), v(8);
    return m;
}

// Coefficient of t^2 in det(t*A + B) via the mixed column expansion, and its
// t^1 sibling with the roles swapped.
inline double mixed_det(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
    double sum = 0.0;
    for (int k = 0; k < 3; ++k) {
        Eigen::Matrix3d m = a;
        m.col(k) = b.col(k);
        sum += m.determinant();
    }
    return sum;
}

} // namespace detail

/// Builds the normalization transform for the pooled 2N points of both views
/// and returns the transformed correspondences. After the transform the points
/// have zero centroid and mean distance sqrt(2) from the origin.
inline std::pair<NormalizationTransform, std::vector<Correspondence>>
normalize(std::span<const Correspondence> points) {
    if (points.empty()) throw std::invalid_argument("normalize: no points");

    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (const auto& c : points) mean += (c.q.head<2>() + c.q_prime.head<2>());
    mean /= 2.0 * static_cast<double>(points.size());

    double mean_dist = 0.0;
    for (const auto& c : points) {
        mean_dist += (c.q.head<2>() - mean).norm();
        mean_dist += (c.q_prime.head<2>() - mean).norm();
    }
    mean_dist /= 2.0 * static_cast<double>(points.size());
    if (mean_dist < 1e-12)
        throw DegenerateError("normalize: points are coincident, scale undefined");

    const double gamma = std::sqrt(2.0) / mean_dist;
    NormalizationTransform t;
    t.S << gamma, 0.0, -gamma * mean.x(), 0.0, gamma, -gamma * mean.y(), 0.0, 0.0, 1.0;

    std::vector<Correspondence> transformed;
    transformed.reserve(points.size());
    for (const auto& c : points) {
        transformed.emplace_back(gamma * c.q.x() - gamma * mean.x(),
                                 gamma * c.q.y() - gamma * mean.y(),
                                 gamma * c.q_prime.x() - gamma * mean.x(),
                                 gamma * c.q_prime.y() - gamma * mean.y());
    }
    return {t, std::move(transformed)};
}

/// |q'^T F q|.
inline double epipolar_residual(const FundamentalMatrix& f, const Correspondence& c) {
    return std::abs(c.q_prime.dot(f.F * c.q));
}

/// Minimal seven-point estimation. The two-dimensional null space of the 7x9
/// design matrix gives a pencil t F1 + F2 whose rank-2 members are the roots of
/// a cubic; there are one to three real solutions.
inline std::vector<FundamentalMatrix>
solve_fundamental_7pt(std::span<const Correspondence> points, double rank_tol = 1e-9) {
    if (points.size() != 7)
        throw std::invalid_argument("solve_fundamental_7pt: expected exactly 7 correspondences");

    Eigen::Matrix<double, 7, 9> design;
    for (int i = 0; i < 7; ++i) design.row(i) = detail::epipolar_row(points[i]);

    Eigen::JacobiSVD<Eigen::Matrix<double, 7, 9>> svd(design, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (sv(6) <= rank_tol * sv(0))
        throw DegenerateError("solve_fundamental_7pt: null space dimension exceeds 2");

    const Eigen::Matrix3d f1 = detail::unflatten(svd.matrixV().col(7));
    const Eigen::Matrix3d f2 = detail::unflatten(svd.matrixV().col(8));

    // det(t F1 + F2) as a cubic in t.
    const double c3 = f1.determinant();
    const double c2 = detail::mixed_det(f1, f2);
    const double c1 = detail::mixed_det(f2, f1);
    const double c0 = f2.determinant();
    const double coeff_scale = std::max({std::abs(c3), std::abs(c2), std::abs(c1), std::abs(c0)});
    if (coeff_scale == 0.0)
        throw DegenerateError("solve_fundamental_7pt: determinant pencil vanishes identically");

    std::vector<FundamentalMatrix> out;
    for (double t : solve_cubic_real(c3, c2, c1, c0))
        out.push_back({detail::normalize_scale_sign(t * f1 + f2)});
    if (std::abs(c3) <= 1e-12 * coeff_scale)
        out.push_back({detail::normalize_scale_sign(f1)}); // root at infinity
    if (out.empty())
        throw DegenerateError("solve_fundamental_7pt: no real root of the determinant cubic");
    return out;
}

/// Normalized eight-point estimation for N >= 8: least-squares null vector of
/// the design matrix, then rank 2 enforced by zeroing the smallest singular
/// value.
inline FundamentalMatrix solve_fundamental_npt(std::span<const Correspondence> points,
                                               double rank_tol = 1e-9) {
    if (points.size() < 8)
        throw std::invalid_argument("solve_fundamental_npt: need at least 8 correspondences");

    Eigen::MatrixXd design(points.size(), 9);
    for (std::size_t i = 0; i < points.size(); ++i)
        design.row(static_cast<int>(i)) = detail::epipolar_row(points[i]);

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (sv(7) <= rank_tol * sv(0))
        throw DegenerateError("solve_fundamental_npt: design matrix rank below 8");

    const Eigen::Matrix3d f_lin = detail::unflatten(svd.matrixV().col(8));
    Eigen::JacobiSVD<Eigen::Matrix3d> fsvd(f_lin, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Vector3d s = fsvd.singularValues();
    s(2) = 0.0;
    const Eigen::Matrix3d f = fsvd.matrixU() * s.asDiagonal() * fsvd.matrixV().transpose();
    return {detail::normalize_scale_sign(f)};
}

/// Maps a fundamental matrix estimated on normalized points back to the
/// original pixel coordinates: F -> S^T F S.
inline FundamentalMatrix denormalize_fundamental(const FundamentalMatrix& f,
                                                 const NormalizationTransform& t) {
    return {detail::normalize_scale_sign(t.S.transpose() * f.F * t.S)};
}

} // namespace selfcalib
