// io.hpp
// File formats for the pipeline's stage handoff: dense matrices and masks as
// CSV, run manifests / fit reports / models as JSON, ray probes as CSV, 3D
// projections as JSON and PLY. Doubles are printed with %.17g so every file
// round-trips bit-exactly.

#pragma once

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpt/errors.hpp"
#include "gpt/experiment.hpp"
#include "gpt/geometry.hpp"
#include "gpt/lowrank.hpp"

namespace gpt {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot open for writing: " + path.string());
    out << text;
    if (!out) throw data_error("write failed: " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open for reading: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// --- CSV ---------------------------------------------------------------------

inline void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m,
                             const std::string& col_prefix = "c") {
    std::string out;
    for (int j = 0; j < m.cols(); ++j) {
        if (j) out += ',';
        out += col_prefix + std::to_string(j);
    }
    out += '\n';
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j) {
            if (j) out += ',';
            out += fmt_double(m(i, j));
        }
        out += '\n';
    }
    write_text_file(path, out);
}

inline Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path) {
    std::istringstream in(read_text_file(path));
    std::string line;
    if (!std::getline(in, line)) throw data_error("empty CSV: " + path.string());
    std::vector<std::vector<double>> rows;
    size_t n_cols = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw data_error("bad numeric cell '" + cell + "' in " + path.string());
            }
        }
        if (n_cols == 0) n_cols = row.size();
        if (row.size() != n_cols)
            throw data_error("ragged CSV row in " + path.string());
        rows.push_back(std::move(row));
    }
    Eigen::MatrixXd m(rows.size(), n_cols);
    for (size_t i = 0; i < rows.size(); ++i)
        for (size_t j = 0; j < n_cols; ++j) m(i, j) = rows[i][j];
    return m;
}

inline void write_mask_csv(const std::filesystem::path& path, const BoolMask& mask) {
    write_matrix_csv(path, mask.cast<double>().matrix(), "m");
}

inline BoolMask read_mask_csv(const std::filesystem::path& path) {
    return read_matrix_csv(path).array() != 0.0;
}

inline void write_ray_probes_csv(const std::filesystem::path& path,
                                 const std::vector<RayProbe>& probes) {
    std::string out = "d1,d2,d3,d4,d5,d6,d7,d8,t_realized,t_consistent,ratio\n";
    for (const auto& p : probes) {
        for (int k = 0; k < 8; ++k) out += fmt_double(p.direction[k]) + ",";
        out += fmt_double(p.t_realized) + "," + fmt_double(p.t_consistent) + "," +
               fmt_double(p.ratio) + "\n";
    }
    write_text_file(path, out);
}

// --- JSON --------------------------------------------------------------------

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
    try {
        return nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& err) {
        throw data_error("bad JSON in " + path.string() + ": " + err.what());
    }
}

inline nlohmann::json fit_report_to_json(const FitReport& r) {
    return {{"rank", r.rank},
            {"chi2_train", r.chi2_train},
            {"chi2_test", r.chi2_test},
            {"iterations", r.iterations},
            {"restarts_used", r.restarts_used},
            {"converged", r.converged}};
}

inline void write_projection_json(const std::filesystem::path& path, const Projection3D& proj) {
    nlohmann::json j;
    j["axes"] = proj.axes;
    j["dimension"] = proj.hull.dimension;
    auto& verts = j["hull_vertices"] = nlohmann::json::array();
    for (const auto& v : proj.hull.vertices) verts.push_back({v.x(), v.y(), v.z()});
    auto& facets = j["hull_facets"] = nlohmann::json::array();
    for (const auto& f : proj.hull.facets) facets.push_back({f[0], f[1], f[2]});
    j["n_points"] = proj.points.size();
    write_json(path, j);
}

inline void write_projection_ply(const std::filesystem::path& path, const Projection3D& proj) {
    std::string out = "ply\nformat ascii 1.0\n";
    out += "element vertex " + std::to_string(proj.hull.vertices.size()) + "\n";
    out += "property double x\nproperty double y\nproperty double z\n";
    out += "element face " + std::to_string(proj.hull.facets.size()) + "\n";
    out += "property list uchar int vertex_indices\nend_header\n";
    for (const auto& v : proj.hull.vertices)
        out += fmt_double(v.x()) + " " + fmt_double(v.y()) + " " + fmt_double(v.z()) + "\n";
    for (const auto& f : proj.hull.facets)
        out += "3 " + std::to_string(f[0]) + " " + std::to_string(f[1]) + " " +
               std::to_string(f[2]) + "\n";
    write_text_file(path, out);
}

} // namespace gpt
