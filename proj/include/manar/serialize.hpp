#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "manar/arproc.hpp"
#include "manar/sysid.hpp"

namespace manar {

using json = nlohmann::ordered_json;

/// Row-major flattening used by every on-disk matrix.
inline json matrix_to_json(const Matrix& m) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) arr.push_back(m(i, j));
    return arr;
}

inline Matrix matrix_from_json(const json& arr, int rows, int cols) {
    if (!arr.is_array() || arr.size() != static_cast<std::size_t>(rows) * cols)
        throw invalid_input_error("matrix_from_json: expected " +
                                  std::to_string(rows * cols) + " entries");
    Matrix m(rows, cols);
    std::size_t idx = 0;
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = arr[idx++].get<double>();
    return m;
}

inline json trajectory_to_json(const Trajectory& traj) {
    json doc;
    doc["manifold"] = to_string(traj.manifold.kind);
    doc["n"] = traj.manifold.n;
    doc["k"] = traj.manifold.point_cols();
    doc["sigma"] = traj.sigma;
    doc["seed"] = traj.seed;
    doc["phi_true"] = traj.phi_true ? matrix_to_json(*traj.phi_true) : json(nullptr);
    json pts = json::array();
    for (const Matrix& p : traj.points) pts.push_back(matrix_to_json(p));
    doc["points"] = pts;
    return doc;
}

inline Trajectory trajectory_from_json(const json& doc) {
    Trajectory traj;
    const auto kind = manifold_kind_from_string(doc.at("manifold").get<std::string>());
    const int n = doc.at("n").get<int>();
    const int k = doc.at("k").get<int>();
    switch (kind) {
        case ManifoldKind::orthogonal: traj.manifold = Manifold::orthogonal(n); break;
        case ManifoldKind::stiefel: traj.manifold = Manifold::stiefel(n, k); break;
        case ManifoldKind::grassmann: traj.manifold = Manifold::grassmann(n, k); break;
    }
    traj.sigma = doc.at("sigma").get<double>();
    traj.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("phi_true") && !doc.at("phi_true").is_null())
        traj.phi_true = matrix_from_json(doc.at("phi_true"), n, n);
    for (const json& p : doc.at("points"))
        traj.points.push_back(matrix_from_json(p, n, traj.manifold.point_cols()));
    traj.validate();
    return traj;
}

inline json report_to_json(const EstimateReport& report) {
    json doc;
    doc["phi_hat"] = matrix_to_json(report.phi_hat);
    doc["error"] = report.error ? json(*report.error) : json(nullptr);
    doc["final_cost"] = report.final_cost;
    doc["outer_iterations"] = report.outer_iterations;
    doc["inner_steps"] = report.inner_steps;
    doc["converged"] = report.converged;
    doc["tol"] = report.tolerance_used;
    doc["wall_time_ms"] = report.wall_time_ms;
    return doc;
}

inline EstimateReport report_from_json(const json& doc) {
    EstimateReport report;
    const auto& flat = doc.at("phi_hat");
    const int n = static_cast<int>(std::lround(std::sqrt(double(flat.size()))));
    report.phi_hat = matrix_from_json(flat, n, n);
    if (!doc.at("error").is_null()) report.error = doc.at("error").get<double>();
    report.final_cost = doc.at("final_cost").get<double>();
    report.outer_iterations = doc.at("outer_iterations").get<int>();
    report.inner_steps = doc.at("inner_steps").get<int>();
    report.converged = doc.at("converged").get<bool>();
    report.tolerance_used = doc.at("tol").get<double>();
    report.wall_time_ms = doc.at("wall_time_ms").get<double>();
    return report;
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path);
    out << text;
    if (!out) throw io_error("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open for reading: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw io_error("read failed: " + path);
    return buf.str();
}

}  // namespace manar
