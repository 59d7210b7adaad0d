#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "selfcalib/errors.hpp"
#include "selfcalib/gyro.hpp"
#include "selfcalib/twoview.hpp"

namespace selfcalib {

/// Parsed matches file: one correspondence per line "x1 y1 x2 y2", '#' comments.
/// Comment directives carry optional metadata:
///   # tau: <value>
///   # angle_deg: <value>
///   # image_size: <width> <height>
struct MatchesFile {
    std::vector<Correspondence> correspondences;
    std::optional<double> tau;
    std::optional<double> angle_deg;
    std::optional<std::pair<int, int>> image_size;
};

namespace detail {

inline std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

inline bool parse_directive(const std::string& comment, const std::string& key, std::string* value) {
    const auto pos = comment.find(key + ":");
    if (pos == std::string::npos) return false;
    *value = comment.substr(pos + key.size() + 1);
    return true;
}

} // namespace detail

inline MatchesFile read_matches(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open matches file: " + path.string());

    MatchesFile out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        if (line[first] == '#') {
            std::string value;
            if (detail::parse_directive(line, "tau", &value)) {
                out.tau = std::stod(value);
            } else if (detail::parse_directive(line, "angle_deg", &value)) {
                out.angle_deg = std::stod(value);
            } else if (detail::parse_directive(line, "image_size", &value)) {
                std::istringstream is(value);
                int w = 0, h = 0;
                if (is >> w >> h) out.image_size = {w, h};
            }
            continue;
        }
        std::istringstream is(line.substr(first));
        double x1, y1, x2, y2;
        if (!(is >> x1 >> y1 >> x2 >> y2))
            throw ParseError("matches file " + path.string() + ": bad correspondence at line " +
                             std::to_string(line_no));
        out.correspondences.emplace_back(x1, y1, x2, y2);
    }
    return out;
}

struct MatchesHeader {
    std::optional<double> tau;
    std::optional<double> angle_deg;
    std::optional<std::pair<int, int>> image_size;
    std::vector<std::string> comments;
};

inline void write_matches(const std::filesystem::path& path,
                          std::span<const Correspondence> correspondences,
                          const MatchesHeader& header = {}) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write matches file: " + path.string());
    out << "# correspondences: x1 y1 x2 y2\n";
    for (const auto& c : header.comments) out << "# " << c << "\n";
    if (header.image_size)
        out << "# image_size: " << header.image_size->first << " " << header.image_size->second
            << "\n";
    if (header.angle_deg) out << "# angle_deg: " << detail::format_double(*header.angle_deg) << "\n";
    if (header.tau) out << "# tau: " << detail::format_double(*header.tau) << "\n";
    for (const auto& c : correspondences) {
        out << detail::format_double(c.q.x()) << " " << detail::format_double(c.q.y()) << " "
            << detail::format_double(c.q_prime.x()) << " " << detail::format_double(c.q_prime.y())
            << "\n";
    }
}

/// Gyro log: CSV with header "timestamp_s,wx,wy,wz".
inline std::vector<GyroSample> read_gyro_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open gyro csv: " + path.string());

    std::vector<GyroSample> samples;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.back() == '\r') {
            while (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
        }
        if (line_no == 1 && line.rfind("timestamp", 0) == 0) continue; // header
        std::istringstream is(line);
        GyroSample s;
        char comma;
        if (!(is >> s.timestamp >> comma >> s.omega.x() >> comma >> s.omega.y() >> comma >>
              s.omega.z()))
            throw ParseError("gyro csv " + path.string() + ": bad row at line " +
                             std::to_string(line_no));
        if (!samples.empty() && s.timestamp <= samples.back().timestamp)
            throw ParseError("gyro csv " + path.string() + ": non-increasing timestamp at line " +
                             std::to_string(line_no));
        samples.push_back(s);
    }
    return samples;
}

inline void write_gyro_csv(const std::filesystem::path& path, std::span<const GyroSample> samples) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write gyro csv: " + path.string());
    out << "timestamp_s,wx,wy,wz\n";
    for (const auto& s : samples) {
        out << detail::format_double(s.timestamp) << "," << detail::format_double(s.omega.x())
            << "," << detail::format_double(s.omega.y()) << ","
            << detail::format_double(s.omega.z()) << "\n";
    }
}

namespace detail {

inline nlohmann::json matrix_to_json(const Eigen::Matrix3d& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < 3; ++r) rows.push_back({m(r, 0), m(r, 1), m(r, 2)});
    return rows;
}

inline Eigen::Matrix3d matrix_from_json(const nlohmann::json& j) {
    Eigen::Matrix3d m;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m(r, c) = j.at(r).at(c).get<double>();
    return m;
}

inline nlohmann::json vector_to_json(const Eigen::Vector3d& v) {
    return nlohmann::json{v.x(), v.y(), v.z()};
}

inline Eigen::Vector3d vector_from_json(const nlohmann::json& j) {
    return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

} // namespace detail

/// Sidecar ground truth for synthetic data.
struct GroundTruth {
    Eigen::Matrix3d K = Eigen::Matrix3d::Identity();
    Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
    Eigen::Vector3d t = Eigen::Vector3d::Zero();
    double theta_rad = 0.0;
    double tau = 3.0;
    int image_width = 0;
    int image_height = 0;
    std::uint64_t seed = 0;
};

inline void write_ground_truth(const std::filesystem::path& path, const GroundTruth& gt) {
    nlohmann::json j;
    j["K"] = detail::matrix_to_json(gt.K);
    j["R"] = detail::matrix_to_json(gt.R);
    j["t"] = detail::vector_to_json(gt.t);
    j["theta_rad"] = gt.theta_rad;
    j["theta_deg"] = gt.theta_rad * 180.0 / M_PI;
    j["tau"] = gt.tau;
    j["image_width"] = gt.image_width;
    j["image_height"] = gt.image_height;
    j["seed"] = gt.seed;
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write ground truth json: " + path.string());
    out << j.dump(2) << "\n";
}

inline GroundTruth read_ground_truth(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open ground truth json: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
        GroundTruth gt;
        gt.K = detail::matrix_from_json(j.at("K"));
        gt.R = detail::matrix_from_json(j.at("R"));
        gt.t = detail::vector_from_json(j.at("t"));
        gt.theta_rad = j.at("theta_rad").get<double>();
        gt.tau = j.at("tau").get<double>();
        gt.image_width = j.at("image_width").get<int>();
        gt.image_height = j.at("image_height").get<int>();
        gt.seed = j.at("seed").get<std::uint64_t>();
        return gt;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("ground truth json " + path.string() + ": " + e.what());
    }
}

} // namespace selfcalib
