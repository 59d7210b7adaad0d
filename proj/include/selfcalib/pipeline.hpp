#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "selfcalib/errors.hpp"
#include "selfcalib/gbsolver.hpp"
#include "selfcalib/pose.hpp"
#include "selfcalib/twoview.hpp"

namespace selfcalib {

inline double tau_from_angle_rad(double theta) { return 2.0 * std::cos(theta) + 1.0; }
inline double angle_rad_from_tau(double tau) {
    return std::acos(std::clamp((tau - 1.0) / 2.0, -1.0, 1.0));
}

struct PipelineOptions {
    // Pairs whose rotation angle (from tau) falls below this are rejected as
    // near-pure-translation.
    double min_angle_deg = 5.0;
    // Principal-point feasibility window: solutions with |a - cx| or |b - cy|
    // beyond the half-width are unfeasible. Disabled when no center is set.
    double pp_window_px = 50.0;
    std::optional<Eigen::Vector2d> pp_center;
    // |tr R - tau| beyond this rejects the candidate.
    double trace_tol = 0.05;
    SolverOptions solver;
};

enum class PairStatus {
    ok,
    angle_below_min,
    degenerate,
    no_feasible_solution,
};

inline const char* to_string(PairStatus s) {
    switch (s) {
        case PairStatus::ok: return "ok";
        case PairStatus::angle_below_min: return "angle_below_min";
        case PairStatus::degenerate: return "degenerate";
        case PairStatus::no_feasible_solution: return "no_feasible_solution";
    }
    return "unknown";
}

/// Outcome of calibrating one correspondence pair. K, R, t are in the original
/// pixel coordinates.
struct PairResult {
    PairStatus status = PairStatus::no_feasible_solution;
    Eigen::Matrix3d K = Eigen::Matrix3d::Identity();
    Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
    Eigen::Vector3d t = Eigen::Vector3d::UnitX();
    double tau_used = 3.0;
    double theta_deg = 0.0;
    double epipolar_residual_median = 0.0; // pixels, on the denormalized F
    double trace_deviation = 0.0;
    int n_real_solutions = 0;
    int n_feasible_solutions = 0;
    int n_f_candidates = 0;
    int n_pp_filtered = 0;
    int n_cheirality_failed = 0;
    int n_trace_rejected = 0;
    // Every feasible (possibly filtered) denormalized solution, best first.
    std::vector<CalibrationSolution> all_solutions;
};

namespace detail {

inline double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        std::nth_element(v.begin(), v.begin() + mid - 1, v.end());
        m = 0.5 * (m + v[mid - 1]);
    }
    return m;
}

struct ScoredCandidate {
    CalibrationSolution solution_raw; // denormalized
    PoseSelection pose;
    SolveStats stats;
    int f_index = 0;
};

} // namespace detail

/// Full self-calibration of one pair: normalize, estimate F (seven-point for
/// N = 7, N-point otherwise), solve for the internals, denormalize, recover the
/// pose, and apply the angle / principal-point / trace filters. Among surviving
/// candidates the one with the smallest trace deviation wins.
inline PairResult calibrate_pair(std::span<const Correspondence> points, double tau,
                                 const PipelineOptions& opt = {}) {
    if (points.size() < 7)
        throw std::invalid_argument("calibrate_pair: need at least 7 correspondences");

    PairResult result;
    result.tau_used = tau;
    const double theta_rad = angle_rad_from_tau(tau);
    result.theta_deg = theta_rad * 180.0 / M_PI;

    if (result.theta_deg < opt.min_angle_deg) {
        result.status = PairStatus::angle_below_min;
        return result;
    }

    auto [transform, normalized_points] = normalize(points);

    std::vector<FundamentalMatrix> f_candidates;
    try {
        if (points.size() == 7) {
            f_candidates = solve_fundamental_7pt(normalized_points);
        } else {
            f_candidates = {solve_fundamental_npt(normalized_points)};
        }
    } catch (const DegenerateError&) {
        result.status = PairStatus::degenerate;
        return result;
    }
    result.n_f_candidates = static_cast<int>(f_candidates.size());

    const Eigen::Matrix3d s_inv = transform.inverse();
    std::vector<detail::ScoredCandidate> survivors;
    int n_degenerate_roots = 0;

    for (int fi = 0; fi < static_cast<int>(f_candidates.size()); ++fi) {
        const FundamentalMatrix& f_norm = f_candidates[fi];
        SolveStats stats;
        std::vector<CalibrationSolution> solutions;
        try {
            solutions = self_calibrate(f_norm.F, tau, opt.solver, &stats);
        } catch (const DegenerateError&) {
            ++n_degenerate_roots;
            continue;
        }
        result.n_real_solutions = std::max(result.n_real_solutions, stats.n_real);
        result.n_feasible_solutions = std::max(result.n_feasible_solutions, stats.n_feasible);

        for (const auto& sol_norm : solutions) {
            // K in pixel coordinates: K = S^-1 K_norm.
            const Eigen::Matrix3d k_raw = s_inv * sol_norm.K;
            CalibrationSolution sol_raw =
                CalibrationSolution::from_abp(k_raw(0, 2), k_raw(1, 2), k_raw(0, 0) * k_raw(0, 0));
            result.all_solutions.push_back(sol_raw);

            if (opt.pp_center) {
                if (std::abs(sol_raw.a - opt.pp_center->x()) >= opt.pp_window_px ||
                    std::abs(sol_raw.b - opt.pp_center->y()) >= opt.pp_window_px) {
                    ++result.n_pp_filtered;
                    continue;
                }
            }

            const EssentialMatrix e = essential_from_f(f_norm, sol_norm.K);
            std::vector<Correspondence> calibrated;
            calibrated.reserve(normalized_points.size());
            const Eigen::Matrix3d k_inv = sol_norm.K.inverse();
            for (const auto& c : normalized_points) {
                const Eigen::Vector3d x1 = k_inv * c.q;
                const Eigen::Vector3d x2 = k_inv * c.q_prime;
                calibrated.emplace_back(x1.x(), x1.y(), x2.x(), x2.y());
            }

            detail::ScoredCandidate cand;
            cand.solution_raw = sol_raw;
            cand.stats = stats;
            cand.f_index = fi;
            try {
                cand.pose = decompose_essential(e, calibrated, tau, opt.trace_tol);
            } catch (const CheiralityError&) {
                ++result.n_cheirality_failed;
                continue;
            }
            if (!cand.pose.trace_consistent) {
                ++result.n_trace_rejected;
                continue;
            }
            survivors.push_back(std::move(cand));
        }
    }

    if (survivors.empty()) {
        result.status = (n_degenerate_roots == static_cast<int>(f_candidates.size()))
                            ? PairStatus::degenerate
                            : PairStatus::no_feasible_solution;
        return result;
    }

    const auto best = std::min_element(
        survivors.begin(), survivors.end(),
        [](const detail::ScoredCandidate& x, const detail::ScoredCandidate& y) {
            return x.pose.trace_deviation < y.pose.trace_deviation;
        });

    result.status = PairStatus::ok;
    result.K = best->solution_raw.K;
    result.R = best->pose.pose.R;
    result.t = best->pose.pose.t;
    result.trace_deviation = best->pose.trace_deviation;
    result.n_real_solutions = best->stats.n_real;
    result.n_feasible_solutions = best->stats.n_feasible;

    const FundamentalMatrix f_raw =
        denormalize_fundamental(f_candidates[best->f_index], transform);
    std::vector<double> residuals;
    residuals.reserve(points.size());
    for (const auto& c : points) residuals.push_back(epipolar_residual(f_raw, c));
    result.epipolar_residual_median = detail::median_of(std::move(residuals));
    return result;
}

} // namespace selfcalib
