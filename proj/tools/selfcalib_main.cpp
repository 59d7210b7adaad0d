// Command-line frontend: calibrate (internals + pose from matched points and a
// known rotation angle), gyro (angle from an angular-rate log), synth
// (synthetic data generation and benchmark runs).

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "selfcalib/errors.hpp"
#include "selfcalib/io.hpp"
#include "selfcalib/pipeline.hpp"
#include "selfcalib/synthbench.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDegenerate = 2; // no pair produced an accepted solution
constexpr int kExitParse = 3;

using nlohmann::json;

json pair_to_json(const std::string& input, const selfcalib::PairResult& r) {
    json j;
    j["input"] = input;
    j["status"] = selfcalib::to_string(r.status);
    j["accepted"] = r.status == selfcalib::PairStatus::ok;
    j["tau_used"] = r.tau_used;
    j["theta_deg"] = r.theta_deg;
    if (r.status == selfcalib::PairStatus::ok) {
        j["K"] = selfcalib::detail::matrix_to_json(r.K);
        j["R"] = selfcalib::detail::matrix_to_json(r.R);
        j["t"] = selfcalib::detail::vector_to_json(r.t);
        j["epipolar_residual_median"] = r.epipolar_residual_median;
        j["trace_deviation"] = r.trace_deviation;
        j["n_real_solutions"] = r.n_real_solutions;
        j["n_feasible_solutions"] = r.n_feasible_solutions;
    }
    return j;
}

void print_pair_text(const std::string& input, const selfcalib::PairResult& r) {
    std::printf("pair %s: %s", input.c_str(), selfcalib::to_string(r.status));
    if (r.status != selfcalib::PairStatus::ok) {
        std::printf("\n");
        return;
    }
    std::printf("  f=%.3f  pp=(%.3f, %.3f)  theta=%.3f deg  |trR-tau|=%.2e  residual=%.2e px\n",
                r.K(0, 0), r.K(0, 2), r.K(1, 2), r.theta_deg, r.trace_deviation,
                r.epipolar_residual_median);
}

int run_calibrate(const std::vector<std::string>& files, std::optional<double> tau_flag,
                  std::optional<double> angle_flag, double min_angle_deg, double pp_window_px,
                  std::optional<std::pair<double, double>> center, bool use_json,
                  const std::optional<std::string>& out_dir) {
    json report;
    report["pairs"] = json::array();
    Eigen::Matrix3d k_sum = Eigen::Matrix3d::Zero();
    int n_accepted = 0;

    for (const auto& file : files) {
        const selfcalib::MatchesFile matches = selfcalib::read_matches(file);
        if (matches.correspondences.size() < 7)
            throw selfcalib::ParseError(file + ": fewer than 7 correspondences");

        double tau;
        if (tau_flag) {
            tau = *tau_flag;
        } else if (angle_flag) {
            tau = selfcalib::tau_from_angle_rad(*angle_flag * M_PI / 180.0);
        } else if (matches.tau) {
            tau = *matches.tau;
        } else if (matches.angle_deg) {
            tau = selfcalib::tau_from_angle_rad(*matches.angle_deg * M_PI / 180.0);
        } else {
            throw selfcalib::ParseError(file + ": no rotation angle (use --tau/--angle-deg or a "
                                               "'# tau:'/'# angle_deg:' directive)");
        }

        selfcalib::PipelineOptions opt;
        opt.min_angle_deg = min_angle_deg;
        opt.pp_window_px = pp_window_px;
        if (center) {
            opt.pp_center = Eigen::Vector2d(center->first, center->second);
        } else if (matches.image_size) {
            opt.pp_center = Eigen::Vector2d(0.5 * matches.image_size->first,
                                            0.5 * matches.image_size->second);
        }

        const selfcalib::PairResult result = selfcalib::calibrate_pair(matches.correspondences, tau, opt);
        report["pairs"].push_back(pair_to_json(file, result));
        if (!use_json) print_pair_text(file, result);
        if (result.status == selfcalib::PairStatus::ok) {
            k_sum += result.K;
            ++n_accepted;
        }
    }

    json aggregate;
    aggregate["n_pairs"] = files.size();
    aggregate["n_accepted"] = n_accepted;
    if (n_accepted > 0) {
        const Eigen::Matrix3d k_avg = k_sum / static_cast<double>(n_accepted);
        aggregate["K_average"] = selfcalib::detail::matrix_to_json(k_avg);
        if (!use_json)
            std::printf("aggregate over %d accepted pair(s): f=%.3f pp=(%.3f, %.3f)\n", n_accepted,
                        k_avg(0, 0), k_avg(0, 2), k_avg(1, 2));
    } else if (!use_json) {
        std::printf("no accepted pairs\n");
    }
    report["aggregate"] = aggregate;

    if (use_json) std::cout << report.dump(2) << "\n";
    if (out_dir) {
        std::filesystem::create_directories(*out_dir);
        std::ofstream out(std::filesystem::path(*out_dir) / "report.json");
        out << report.dump(2) << "\n";
    }
    return n_accepted > 0 ? kExitOk : kExitDegenerate;
}

int run_gyro(const std::string& file, double t_start, double t_end, bool use_json) {
    const std::vector<selfcalib::GyroSample> all = selfcalib::read_gyro_csv(file);
    std::vector<selfcalib::GyroSample> window;
    for (const auto& s : all)
        if (s.timestamp > t_start && s.timestamp <= t_end) window.push_back(s);
    if (window.empty()) throw selfcalib::ParseError(file + ": no samples in the requested window");

    const selfcalib::RotationEstimate est = selfcalib::integrate(t_start, window);
    if (use_json) {
        json j;
        j["theta_deg"] = est.theta * 180.0 / M_PI;
        j["theta_rad"] = est.theta;
        j["tau"] = est.tau;
        j["R"] = selfcalib::detail::matrix_to_json(est.R);
        std::cout << j.dump(2) << "\n";
    } else {
        std::printf("theta = %.9f deg\n", est.theta * 180.0 / M_PI);
        std::printf("tau   = %.12f\n", est.tau);
        std::cout << "R =\n" << est.R << "\n";
    }
    return kExitOk;
}

// Constant-axis gyro log covering [0, 1] s whose integral reproduces the
// scene's relative rotation.
std::vector<selfcalib::GyroSample> synthetic_gyro_log(const selfcalib::Scene& scene, int rate_hz) {
    Eigen::AngleAxisd aa(scene.R);
    Eigen::Vector3d axis = aa.axis();
    double angle = aa.angle();
    if (angle < 0.0) {
        angle = -angle;
        axis = -axis;
    }
    std::vector<selfcalib::GyroSample> samples;
    const int n = rate_hz;
    samples.reserve(n + 1);
    for (int i = 0; i <= n; ++i) {
        selfcalib::GyroSample s;
        s.timestamp = static_cast<double>(i) / n;
        s.omega = axis * angle; // rad/s over one second
        samples.push_back(s);
    }
    return samples;
}

int run_synth(std::uint64_t seed, int n_points, int trials, double image_sigma,
              double angle_sigma, const std::string& out_dir, bool use_json) {
    selfcalib::SceneConfig cfg;
    cfg.n_points = n_points;
    cfg.seed = seed;
    selfcalib::NoiseConfig noise;
    noise.image_sigma = image_sigma;
    noise.angle_sigma = angle_sigma;

    if (trials > 0) {
        const auto [trial_results, summary] = selfcalib::run_trials(cfg, noise, trials);
        json j;
        j["config"] = {{"seed", seed},
                       {"n_points", n_points},
                       {"trials", trials},
                       {"image_sigma", image_sigma},
                       {"angle_sigma", angle_sigma}};
        j["n_trials"] = summary.n_trials;
        j["n_failures"] = summary.n_failures;
        j["median_rel_K_error"] = summary.median_rel_K_error;
        j["median_rotation_error_deg"] = summary.median_rotation_error_deg;
        j["median_translation_error_deg"] = summary.median_translation_error_deg;
        j["median_runtime_ms"] = summary.median_runtime_ms;
        j["real_count_histogram"] = summary.real_count_histogram;
        j["feasible_count_histogram"] = summary.feasible_count_histogram;
        std::cout << j.dump(2) << "\n";

        if (!out_dir.empty()) {
            std::filesystem::create_directories(out_dir);
            std::ofstream sum(std::filesystem::path(out_dir) / "summary.json");
            sum << j.dump(2) << "\n";
            std::ofstream csv(std::filesystem::path(out_dir) / "trials.csv");
            csv << "rel_K_error,n_real_solutions,n_feasible_solutions,rotation_error_deg,"
                   "translation_error_deg,runtime_s\n";
            csv.precision(17);
            for (const auto& t : trial_results) {
                csv << t.rel_K_error << "," << t.n_real_solutions << ","
                    << t.n_feasible_solutions << "," << t.rotation_error_deg << ","
                    << t.translation_error_deg << "," << t.runtime_s << "\n";
            }
        }
        return kExitOk;
    }

    // Generation mode: matches + gyro log + ground truth sidecar.
    const std::filesystem::path dir = out_dir.empty() ? "." : out_dir;
    std::filesystem::create_directories(dir);

    selfcalib::Scene scene = selfcalib::generate_scene(cfg, selfcalib::detail::trial_seed(seed, 0));
    std::mt19937_64 noise_rng(selfcalib::detail::mix64(seed ^ 0x8f1b5ce03a96d2efULL));
    const selfcalib::NoisyObservation obs =
        selfcalib::add_noise(scene.correspondences, noise, scene.theta, noise_rng);

    selfcalib::MatchesHeader header;
    header.comments.push_back("synthetic scene, seed " + std::to_string(seed));
    header.image_size = {cfg.image_width, cfg.image_height};
    header.angle_deg = obs.theta * 180.0 / M_PI;
    selfcalib::write_matches(dir / "matches.txt", obs.correspondences, header);

    selfcalib::write_gyro_csv(dir / "gyro.csv", synthetic_gyro_log(scene, 200));

    selfcalib::GroundTruth gt;
    gt.K = cfg.K_gt;
    gt.R = scene.R;
    gt.t = scene.t;
    gt.theta_rad = scene.theta;
    gt.tau = scene.tau;
    gt.image_width = cfg.image_width;
    gt.image_height = cfg.image_height;
    gt.seed = seed;
    selfcalib::write_ground_truth(dir / "ground_truth.json", gt);

    if (use_json) {
        json j;
        j["matches"] = (dir / "matches.txt").string();
        j["gyro"] = (dir / "gyro.csv").string();
        j["ground_truth"] = (dir / "ground_truth.json").string();
        std::cout << j.dump(2) << "\n";
    } else {
        std::printf("wrote %s, %s, %s\n", (dir / "matches.txt").c_str(), (dir / "gyro.csv").c_str(),
                    (dir / "ground_truth.json").c_str());
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-view self-calibration with a known relative rotation angle"};
    app.require_subcommand(1);

    // calibrate
    auto* cal = app.add_subcommand("calibrate", "calibrate from matches files");
    std::vector<std::string> cal_files;
    cal->add_option("files", cal_files, "matches files (one pair each)")->required();
    double cal_tau = 0.0, cal_angle = 0.0;
    auto* tau_opt = cal->add_option("--tau", cal_tau, "trace of the relative rotation");
    auto* angle_opt =
        cal->add_option("--angle-deg", cal_angle, "relative rotation angle in degrees");
    tau_opt->excludes(angle_opt);
    angle_opt->excludes(tau_opt);
    double cal_min_angle = 5.0, cal_window = 50.0;
    cal->add_option("--min-angle-deg", cal_min_angle, "reject pairs rotating less than this");
    cal->add_option("--pp-window-px", cal_window, "principal point window half-width");
    std::vector<double> cal_center;
    cal->add_option("--center", cal_center, "window center x,y (default: image center)")
        ->expected(2)
        ->delimiter(',');
    bool cal_json = false;
    cal->add_flag("--json", cal_json, "machine-readable output");
    std::string cal_out;
    cal->add_option("--out", cal_out, "directory for report.json");

    // gyro
    auto* gyr = app.add_subcommand("gyro", "integrate a gyro log into an angle");
    std::string gyro_file;
    gyr->add_option("file", gyro_file, "csv with header timestamp_s,wx,wy,wz")->required();
    double t_start = 0.0, t_end = 0.0;
    gyr->add_option("--t-start", t_start, "window start (s)")->required();
    gyr->add_option("--t-end", t_end, "window end (s)")->required();
    bool gyro_json = false;
    gyr->add_flag("--json", gyro_json, "machine-readable output");

    // synth
    auto* syn = app.add_subcommand("synth", "synthetic data and benchmarks");
    std::uint64_t seed = 0;
    int n_points = 20, trials = 0;
    double image_sigma = 0.0, angle_sigma = 0.0;
    std::string synth_out;
    bool synth_json = false;
    syn->add_option("--seed", seed, "rng seed");
    syn->add_option("--points", n_points, "correspondences per pair");
    syn->add_option("--trials", trials, "run a benchmark with this many trials");
    syn->add_option("--image-sigma", image_sigma, "pixel noise std");
    syn->add_option("--angle-sigma", angle_sigma, "relative angle noise std");
    syn->add_option("--out", synth_out, "output directory");
    syn->add_flag("--json", synth_json, "machine-readable output");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cal->parsed()) {
            std::optional<double> tau_flag, angle_flag;
            if (tau_opt->count() > 0) tau_flag = cal_tau;
            if (angle_opt->count() > 0) angle_flag = cal_angle;
            std::optional<std::pair<double, double>> center;
            if (cal_center.size() == 2) center = {cal_center[0], cal_center[1]};
            return run_calibrate(cal_files, tau_flag, angle_flag, cal_min_angle, cal_window,
                                 center, cal_json, cal_out.empty()
                                                       ? std::nullopt
                                                       : std::optional<std::string>(cal_out));
        }
        if (gyr->parsed()) return run_gyro(gyro_file, t_start, t_end, gyro_json);
        if (syn->parsed())
            return run_synth(seed, n_points, trials, image_sigma, angle_sigma, synth_out,
                             synth_json);
    } catch (const selfcalib::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    } catch (const selfcalib::DegenerateError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDegenerate;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
