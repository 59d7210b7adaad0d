#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <span>
#include <vector>

#include "selfcalib/errors.hpp"
#include "selfcalib/twoview.hpp"

namespace selfcalib {

struct EssentialMatrix {
    Eigen::Matrix3d E = Eigen::Matrix3d::Zero();
};

/// Relative pose of the second camera: x2 = R x1 + t, with t of unit length
/// and tau the trace of R.
struct RelativePose {
    Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
    Eigen::Vector3d t = Eigen::Vector3d::UnitX();
    double tau = 3.0;
};

/// The two rotations compatible with an essential matrix (translation up to sign).
struct TwistedPair {
    Eigen::Matrix3d R_a;
    Eigen::Matrix3d R_b;
    Eigen::Vector3d t;
};

struct PoseSelection {
    RelativePose pose;
    int positive_depth = 0; // cheirality votes for the winning candidate
    int total_points = 0;
    double trace_deviation = 0.0; // |tr R - tau|
    bool trace_consistent = true;
};

inline Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
    Eigen::Matrix3d m;
    m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
    return m;
}

/// E ~ K^T F K, scale/sign normalized.
inline EssentialMatrix essential_from_f(const FundamentalMatrix& f, const Eigen::Matrix3d& k) {
    if (std::abs(k.determinant()) < 1e-12)
        throw std::invalid_argument("essential_from_f: singular calibration matrix");
    return {detail::normalize_scale_sign(k.transpose() * f.F * k)};
}

/// Frobenius norm of 1/2 tr(E E^T) E - E E^T E for the Frobenius-normalized E;
/// zero exactly on essential matrices.
inline double essential_residual(Eigen::Matrix3d e) {
    const double norm = e.norm();
    if (norm == 0.0) return 0.0;
    e /= norm;
    const Eigen::Matrix3d eet = e * e.transpose();
    return (0.5 * eet.trace() * e - eet * e).norm();
}

/// |1/2 (tau^2-1) tr(E E^T) + (tau+1) tr(E^2) - tau tr^2 E| for the
/// Frobenius-normalized E; zero when tau is the trace of a rotation of E's
/// twisted pair.
inline double trace_constraint_residual(Eigen::Matrix3d e, double tau) {
    const double norm = e.norm();
    if (norm == 0.0) return 0.0;
    e /= norm;
    const double t1 = (e * e.transpose()).trace();
    const double t2 = (e * e).trace();
    const double t3 = e.trace();
    return std::abs(0.5 * (tau * tau - 1.0) * t1 + (tau + 1.0) * t2 - tau * t3 * t3);
}

/// SVD-based candidate factorization E ~ [t]x R with det-corrected U, V.
inline TwistedPair twisted_pair(const Eigen::Matrix3d& e) {
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(e, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d u = svd.matrixU();
    Eigen::Matrix3d v = svd.matrixV();
    if (u.determinant() < 0.0) u = -u;
    if (v.determinant() < 0.0) v = -v;
    Eigen::Matrix3d w;
    w << 0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0;
    TwistedPair tp;
    tp.R_a = u * w * v.transpose();
    tp.R_b = u * w.transpose() * v.transpose();
    tp.t = u.col(2);
    return tp;
}

namespace detail {

// Midpoint triangulation; returns false for near-parallel rays.
inline bool triangulate_midpoint(const Eigen::Matrix3d& r, const Eigen::Vector3d& t,
                                 const Correspondence& c, Eigen::Vector3d* x) {
    const Eigen::Vector3d d1 = c.q;
    const Eigen::Vector3d center2 = -r.transpose() * t;
    const Eigen::Vector3d d2 = r.transpose() * c.q_prime;

    const double d11 = d1.dot(d1);
    const double d12 = d1.dot(d2);
    const double d22 = d2.dot(d2);
    const double det = -d11 * d22 + d12 * d12;
    if (std::abs(det) < 1e-14 * d11 * d22) return false;

    const double b1 = d1.dot(center2);
    const double b2 = d2.dot(center2);
    const double s1 = (-d22 * b1 + d12 * b2) / det;
    const double s2 = (-d12 * b1 + d11 * b2) / det;
    *x = 0.5 * (s1 * d1 + center2 + s2 * d2);
    return true;
}

inline int positive_depth_votes(const Eigen::Matrix3d& r, const Eigen::Vector3d& t,
                                std::span<const Correspondence> points) {
    int votes = 0;
    for (const auto& c : points) {
        Eigen::Vector3d x;
        if (!triangulate_midpoint(r, t, c, &x)) continue;
        const double z1 = x.z();
        const double z2 = (r * x + t).z();
        if (z1 > 0.0 && z2 > 0.0) ++votes;
    }
    return votes;
}

} // namespace detail

/// Chooses among the four (R, t) candidates of E by majority cheirality vote
/// over midpoint-triangulated points (given in calibrated coordinates), then
/// reports how far tr R is from the supplied tau.
inline PoseSelection decompose_essential(const EssentialMatrix& e,
                                         std::span<const Correspondence> points, double tau,
                                         double trace_tol = 0.05) {
    if (points.empty())
        throw std::invalid_argument("decompose_essential: need at least one correspondence");

    const TwistedPair tp = twisted_pair(e.E);
    const std::array<std::pair<const Eigen::Matrix3d*, double>, 4> candidates = {{
        {&tp.R_a, 1.0},
        {&tp.R_a, -1.0},
        {&tp.R_b, 1.0},
        {&tp.R_b, -1.0},
    }};

    int best_votes = -1;
    Eigen::Matrix3d best_r;
    Eigen::Vector3d best_t;
    for (const auto& [r, sign] : candidates) {
        const Eigen::Vector3d t = sign * tp.t;
        const int votes = detail::positive_depth_votes(*r, t, points);
        if (votes > best_votes) {
            best_votes = votes;
            best_r = *r;
            best_t = t;
        }
    }
    if (2 * best_votes <= static_cast<int>(points.size()))
        throw CheiralityError("decompose_essential: no candidate places a majority of points "
                              "in front of both cameras");

    PoseSelection sel;
    sel.pose.R = best_r;
    sel.pose.t = best_t.normalized();
    sel.pose.tau = best_r.trace();
    sel.positive_depth = best_votes;
    sel.total_points = static_cast<int>(points.size());
    sel.trace_deviation = std::abs(best_r.trace() - tau);
    sel.trace_consistent = sel.trace_deviation <= trace_tol;
    return sel;
}

} // namespace selfcalib
