#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <span>
#include <stdexcept>

namespace selfcalib {

/// One gyroscope reading: angular rate (rad/s) at a timestamp (s).
struct GyroSample {
    double timestamp = 0.0;
    Eigen::Vector3d omega = Eigen::Vector3d::Zero();
};

/// Integrated relative rotation with its angle and trace tau = 2 cos(theta) + 1.
struct RotationEstimate {
    Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
    double theta = 0.0; // radians, in [0, pi]
    double tau = 3.0;   // in [-1, 3]
};

/// Rotation by angle |v| about v/|v| via the Rodrigues formula
///   exp([v]x) = I + sin|v|/|v| [v]x + (1-cos|v|)/|v|^2 [v]x^2,
/// with series coefficients near |v| = 0.
inline Eigen::Matrix3d rodrigues_exp(const Eigen::Vector3d& v) {
    const double theta2 = v.squaredNorm();
    const double theta = std::sqrt(theta2);
    double k1, k2; // sin t / t, (1 - cos t) / t^2
    if (theta < 1e-6) {
        k1 = 1.0 - theta2 / 6.0;
        k2 = 0.5 - theta2 / 24.0;
    } else {
        k1 = std::sin(theta) / theta;
        k2 = (1.0 - std::cos(theta)) / theta2;
    }
    Eigen::Matrix3d vx;
    vx << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
    return Eigen::Matrix3d::Identity() + k1 * vx + k2 * vx * vx;
}

namespace detail {

inline Eigen::Matrix3d polar_orthonormalize(const Eigen::Matrix3d& m) {
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d r = svd.matrixU() * svd.matrixV().transpose();
    if (r.determinant() < 0.0) {
        Eigen::Matrix3d u = svd.matrixU();
        u.col(2) = -u.col(2);
        r = u * svd.matrixV().transpose();
    }
    return r;
}

inline RotationEstimate estimate_from_rotation(const Eigen::Matrix3d& r) {
    RotationEstimate est;
    est.R = r;
    const double tau = std::clamp(r.trace(), -1.0, 3.0);
    est.theta = std::acos(std::clamp((tau - 1.0) / 2.0, -1.0, 1.0));
    est.tau = 2.0 * std::cos(est.theta) + 1.0;
    return est;
}

} // namespace detail

/// Left-multiplicative integration of gyro samples starting from the reference
/// time t_ref: R_i = exp([w_i]x dt_i) R_{i-1} with R_0 = I, where each rate is
/// held over the interval ending at its own timestamp (zero-order hold). R is
/// re-orthonormalized every 256 steps.
inline RotationEstimate integrate(double t_ref, std::span<const GyroSample> samples) {
    Eigen::Matrix3d r = Eigen::Matrix3d::Identity();
    double prev = t_ref;
    int steps = 0;
    for (const auto& s : samples) {
        const double dt = s.timestamp - prev;
        if (dt < 0.0)
            throw std::invalid_argument("integrate: non-monotonic gyro timestamps");
        r = rodrigues_exp(s.omega * dt) * r;
        prev = s.timestamp;
        if (++steps % 256 == 0) r = detail::polar_orthonormalize(r);
    }
    if (steps >= 256) r = detail::polar_orthonormalize(r);
    return detail::estimate_from_rotation(r);
}

/// Convenience overload: the first sample is the reference; its rate does not
/// contribute.
inline RotationEstimate integrate(std::span<const GyroSample> samples) {
    if (samples.empty()) return RotationEstimate{};
    return integrate(samples.front().timestamp, samples.subspan(1));
}

} // namespace selfcalib
