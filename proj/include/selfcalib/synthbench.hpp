#pragma once

#include <Eigen/Dense>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "selfcalib/errors.hpp"
#include "selfcalib/gyro.hpp"
#include "selfcalib/pipeline.hpp"
#include "selfcalib/pose.hpp"
#include "selfcalib/twoview.hpp"

namespace selfcalib {

/// Scene layout for the synthetic experiments: a box of points at unit
/// distance, a short baseline, and a 1280x720 image.
struct SceneConfig {
    double distance_to_scene = 1.0;
    double scene_depth = 0.5;
    double baseline_length = 0.1;
    int image_width = 1280;
    int image_height = 720;
    int n_points = 20;
    Eigen::Matrix3d K_gt = (Eigen::Matrix3d() << 1000.0, 0.0, 640.0,
                                                 0.0, 1000.0, 360.0,
                                                 0.0, 0.0, 1.0).finished();
    double min_rotation_deg = 5.0;
    double max_rotation_deg = 30.0;
    std::uint64_t seed = 0;
};

struct NoiseConfig {
    double image_sigma = 0.0; // pixels
    double angle_sigma = 0.0; // std of the multiplicative angle error
};

struct Scene {
    std::vector<Eigen::Vector3d> points3d;
    Eigen::Matrix3d R = Eigen::Matrix3d::Identity(); // x2 = R x1 + t
    Eigen::Vector3d t = Eigen::Vector3d::Zero();
    double theta = 0.0;
    double tau = 3.0;
    Eigen::Matrix3d F = Eigen::Matrix3d::Zero(); // ground-truth fundamental
    std::vector<Correspondence> correspondences;
};

struct TrialResult {
    double rel_K_error = std::numeric_limits<double>::quiet_NaN();
    int n_real_solutions = 0;
    int n_feasible_solutions = 0;
    double rotation_error_deg = std::numeric_limits<double>::quiet_NaN();
    double translation_error_deg = std::numeric_limits<double>::quiet_NaN();
    double trace_deviation = std::numeric_limits<double>::quiet_NaN();
    double runtime_s = 0.0;
    bool success = false;
};

struct TrialSummary {
    int n_trials = 0;
    int n_failures = 0;
    double median_rel_K_error = std::numeric_limits<double>::quiet_NaN();
    double median_rotation_error_deg = std::numeric_limits<double>::quiet_NaN();
    double median_translation_error_deg = std::numeric_limits<double>::quiet_NaN();
    double median_runtime_ms = 0.0;
    std::array<int, 7> real_count_histogram{};
    std::array<int, 7> feasible_count_histogram{};
};

namespace detail {

// splitmix64; decorrelates per-trial streams from (seed, index).
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
inline std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t index) {
    return mix64(seed ^ mix64(index + 1));
}

inline Eigen::Vector3d random_unit_vector(std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::Vector3d v;
    do {
        v = Eigen::Vector3d(gauss(rng), gauss(rng), gauss(rng));
    } while (v.norm() < 1e-6);
    return v.normalized();
}

} // namespace detail

/// Projects box points visible in both views for a fixed relative pose;
/// camera 2 sits at `camera2_center` (first-camera frame) with rotation R.
inline Scene make_scene_from_pose(const SceneConfig& cfg, const Eigen::Matrix3d& r,
                                  const Eigen::Vector3d& camera2_center, std::uint64_t seed) {
    Scene scene;
    scene.R = r;
    scene.t = -r * camera2_center;
    scene.tau = r.trace();
    scene.theta = angle_rad_from_tau(std::clamp(scene.tau, -1.0, 3.0));
    scene.F = detail::normalize_scale_sign(cfg.K_gt.inverse().transpose() * skew(scene.t) * r *
                                           cfg.K_gt.inverse());

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(0.0, static_cast<double>(cfg.image_width));
    std::uniform_real_distribution<double> uy(0.0, static_cast<double>(cfg.image_height));
    std::uniform_real_distribution<double> uz(cfg.distance_to_scene - 0.5 * cfg.scene_depth,
                                              cfg.distance_to_scene + 0.5 * cfg.scene_depth);
    const Eigen::Matrix3d k_inv = cfg.K_gt.inverse();

    scene.points3d.reserve(cfg.n_points);
    scene.correspondences.reserve(cfg.n_points);
    for (int i = 0; i < cfg.n_points; ++i) {
        bool placed = false;
        for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
            const double px = ux(rng);
            const double py = uy(rng);
            const double z = uz(rng);
            const Eigen::Vector3d x = z * (k_inv * Eigen::Vector3d(px, py, 1.0));
            const Eigen::Vector3d x2 = r * x + scene.t;
            if (x2.z() <= 0.0) continue;
            const Eigen::Vector3d q2 = cfg.K_gt * x2 / x2.z();
            if (q2.x() < 0.0 || q2.x() > cfg.image_width || q2.y() < 0.0 ||
                q2.y() > cfg.image_height)
                continue;
            scene.points3d.push_back(x);
            scene.correspondences.emplace_back(px, py, q2.x(), q2.y());
            placed = true;
        }
        if (!placed)
            throw DegenerateError("make_scene_from_pose: cannot place points inside both images");
    }
    return scene;
}

/// Random scene: rotation axis uniform on the sphere, angle uniform in the
/// configured range, baseline direction uniform.
inline Scene generate_scene(const SceneConfig& cfg, std::uint64_t seed) {
    if (cfg.n_points < 7) throw std::invalid_argument("generate_scene: need n_points >= 7");
    std::mt19937_64 rng(detail::mix64(seed));
    const Eigen::Vector3d axis = detail::random_unit_vector(rng);
    std::uniform_real_distribution<double> uangle(cfg.min_rotation_deg * M_PI / 180.0,
                                                  cfg.max_rotation_deg * M_PI / 180.0);
    const double angle = uangle(rng);
    const Eigen::Matrix3d r = rodrigues_exp(axis * angle);
    const Eigen::Vector3d center2 = cfg.baseline_length * detail::random_unit_vector(rng);
    return make_scene_from_pose(cfg, r, center2, detail::mix64(seed ^ 0x5bf0361c2e1c6f1bULL));
}

struct NoisyObservation {
    std::vector<Correspondence> correspondences;
    double theta = 0.0;
};

/// I.i.d. Gaussian pixel noise on both views plus the multiplicative angle
/// model theta * (1 + s), s ~ N(0, angle_sigma). Zero sigmas pass data through
/// untouched.
inline NoisyObservation add_noise(std::span<const Correspondence> correspondences,
                                  const NoiseConfig& noise, double theta_true,
                                  std::mt19937_64& rng) {
    NoisyObservation out;
    out.correspondences.assign(correspondences.begin(), correspondences.end());
    out.theta = theta_true;
    if (noise.image_sigma > 0.0) {
        std::normal_distribution<double> gauss(0.0, noise.image_sigma);
        for (auto& c : out.correspondences) {
            c = Correspondence(c.q.x() + gauss(rng), c.q.y() + gauss(rng),
                               c.q_prime.x() + gauss(rng), c.q_prime.y() + gauss(rng));
        }
    }
    if (noise.angle_sigma > 0.0) {
        std::normal_distribution<double> gauss(0.0, noise.angle_sigma);
        out.theta = theta_true * (1.0 + gauss(rng));
    }
    return out;
}

namespace detail {

inline double rotation_angle_deg(const Eigen::Matrix3d& r) {
    return angle_rad_from_tau(std::clamp(r.trace(), -1.0, 3.0)) * 180.0 / M_PI;
}

inline double direction_angle_deg(const Eigen::Vector3d& u, const Eigen::Vector3d& v) {
    const double c = std::clamp(u.normalized().dot(v.normalized()), -1.0, 1.0);
    return std::acos(c) * 180.0 / M_PI;
}

} // namespace detail

/// One full pipeline trial. The filters of the real-data pipeline (minimum
/// angle, principal-point window) are off: the synthetic studies measure the
/// bare solver.
inline TrialResult run_trial(const SceneConfig& cfg, const NoiseConfig& noise,
                             std::uint64_t trial_seed_value) {
    TrialResult tr;
    const auto t_start = std::chrono::steady_clock::now();
    try {
        const Scene scene = generate_scene(cfg, trial_seed_value);
        std::mt19937_64 noise_rng(detail::mix64(trial_seed_value ^ 0x8f1b5ce03a96d2efULL));
        const NoisyObservation obs =
            add_noise(scene.correspondences, noise, scene.theta, noise_rng);
        const double tau = tau_from_angle_rad(obs.theta);

        PipelineOptions opt;
        opt.min_angle_deg = 0.0;
        opt.pp_center.reset();
        opt.trace_tol = std::numeric_limits<double>::infinity();

        const PairResult pair = calibrate_pair(obs.correspondences, tau, opt);
        if (pair.status == PairStatus::ok) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& sol : pair.all_solutions)
                best = std::min(best, (sol.K - cfg.K_gt).norm() / cfg.K_gt.norm());
            tr.rel_K_error = best;
            tr.n_real_solutions = pair.n_real_solutions;
            tr.n_feasible_solutions = pair.n_feasible_solutions;
            tr.rotation_error_deg = detail::rotation_angle_deg(scene.R.transpose() * pair.R);
            tr.translation_error_deg = detail::direction_angle_deg(scene.t, pair.t);
            tr.trace_deviation = pair.trace_deviation;
            tr.success = true;
        }
    } catch (const std::exception&) {
        tr.success = false;
    }
    tr.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return tr;
}

namespace detail {

inline double median_or_nan(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    return median_of(std::move(v));
}

} // namespace detail

/// Runs `n_trials` independent trials with per-trial RNG streams derived from
/// (seed, index), so any execution order gives identical results.
inline std::pair<std::vector<TrialResult>, TrialSummary>
run_trials(const SceneConfig& cfg, const NoiseConfig& noise, int n_trials) {
    std::vector<TrialResult> trials;
    trials.reserve(n_trials);
    for (int i = 0; i < n_trials; ++i)
        trials.push_back(run_trial(cfg, noise, detail::trial_seed(cfg.seed, i)));

    TrialSummary summary;
    summary.n_trials = n_trials;
    std::vector<double> k_err, rot_err, tr_err, runtimes;
    for (const auto& tr : trials) {
        runtimes.push_back(tr.runtime_s * 1e3);
        if (!tr.success) {
            ++summary.n_failures;
            continue;
        }
        k_err.push_back(tr.rel_K_error);
        rot_err.push_back(tr.rotation_error_deg);
        tr_err.push_back(tr.translation_error_deg);
        summary.real_count_histogram[std::clamp(tr.n_real_solutions, 0, 6)]++;
        summary.feasible_count_histogram[std::clamp(tr.n_feasible_solutions, 0, 6)]++;
    }
    summary.median_rel_K_error = detail::median_or_nan(std::move(k_err));
    summary.median_rotation_error_deg = detail::median_or_nan(std::move(rot_err));
    summary.median_translation_error_deg = detail::median_or_nan(std::move(tr_err));
    summary.median_runtime_ms = detail::median_or_nan(std::move(runtimes));
    return {std::move(trials), summary};
}

} // namespace selfcalib
