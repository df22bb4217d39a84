#pragma once

#include <charconv>
#include <cstdlib>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "core_model.hpp"
#include "errors.hpp"

/**
 * @file io.hpp
 * @brief Per-view CSV matrices, dataset manifests, label files and result JSON.
 *
 * Labels are 1-based in every file and 0-based in memory.
 */
namespace orkm::io {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct CsvOptions {
    char delimiter = ',';
    bool has_header = false;
};

namespace detail {

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t begin = 0;
    while (begin < text.size()) {
        auto end = text.find('\n', begin);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(begin, end - begin);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        begin = end + 1;
    }
    while (!lines.empty() && lines.back().find_first_not_of(" \t") == std::string_view::npos) lines.pop_back();
    return lines;
}

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

inline std::string location(const fs::path& path, std::size_t line, std::size_t column) {
    return path.string() + ":" + std::to_string(line) + ":" + std::to_string(column);
}

inline double parse_cell(std::string_view cell, const fs::path& path, std::size_t line, std::size_t column) {
    cell = trim(cell);
    if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size())
        throw ParseError(location(path, line, column) + ": non-numeric cell '" + std::string(cell) + "'");
    if (!std::isfinite(value))
        throw ParseError(location(path, line, column) + ": non-finite cell '" + std::string(cell) + "'");
    return value;
}

} // namespace detail

/// Reads a numeric matrix; ragged rows, non-numeric or non-finite cells raise ParseError with file:line:column.
inline Matrix read_csv(const fs::path& path, const CsvOptions& options = {}) {
    const std::string text = detail::read_file(path);
    const auto lines = detail::split_lines(text);
    std::vector<std::vector<double>> rows;
    std::size_t width = 0;
    for (std::size_t li = options.has_header ? 1 : 0; li < lines.size(); ++li) {
        std::vector<double> row;
        std::string_view line = lines[li];
        std::size_t column = 1;
        while (true) {
            const auto cut = line.find(options.delimiter);
            row.push_back(detail::parse_cell(line.substr(0, cut), path, li + 1, column));
            if (cut == std::string_view::npos) break;
            line.remove_prefix(cut + 1);
            ++column;
        }
        if (rows.empty()) {
            width = row.size();
        } else if (row.size() != width) {
            throw ParseError(detail::location(path, li + 1, row.size()) + ": ragged row with " +
                             std::to_string(row.size()) + " cells, expected " + std::to_string(width));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError(path.string() + ": no data rows");
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < width; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return m;
}

/// Shortest decimal form that reads back to the same double (at most 17 significant digits).
inline std::string format_double(double x) {
    char buffer[32];
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, x);
    return std::string(buffer, ptr);
}

inline void write_csv(const fs::path& path, const Matrix& m, char delimiter = ',') {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << delimiter;
            out << format_double(m(i, j));
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed for " + path.string());
}

/// One integer label per line (first column if several); returned 0-based.
inline std::vector<int> read_labels(const fs::path& path, const CsvOptions& options = {}) {
    const Matrix m = read_csv(path, options);
    std::vector<int> labels;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const double value = m(i, 0);
        if (value != std::round(value) || value < 1.0)
            throw ParseError(detail::location(path, static_cast<std::size_t>(i) + (options.has_header ? 2 : 1), 1) +
                             ": label must be a positive integer");
        labels.push_back(static_cast<int>(value) - 1);
    }
    return labels;
}

inline void write_labels(const fs::path& path, const std::vector<int>& labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    for (int l : labels) out << l + 1 << '\n';
}

struct DatasetManifest {
    std::string name;
    std::vector<fs::path> view_files;
    std::optional<fs::path> label_file;
    std::optional<int> k_true;
    char delimiter = ',';
    bool has_header = false;
};

/// Parses a manifest; relative paths are resolved against the manifest's directory.
inline DatasetManifest read_manifest(const fs::path& path) {
    json doc;
    try {
        doc = json::parse(detail::read_file(path));
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    DatasetManifest m;
    const auto base = path.parent_path();
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
    try {
        m.name = doc.value("name", path.stem().string());
        for (const auto& v : doc.at("views")) m.view_files.push_back(resolve(v.get<std::string>()));
        if (doc.contains("labels") && !doc["labels"].is_null()) m.label_file = resolve(doc["labels"].get<std::string>());
        if (doc.contains("k_true") && !doc["k_true"].is_null()) m.k_true = doc["k_true"].get<int>();
        const auto delim = doc.value("delimiter", std::string(","));
        if (delim.size() != 1) throw ParseError(path.string() + ": delimiter must be a single character");
        m.delimiter = delim.front();
        m.has_header = doc.value("has_header", false);
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    if (m.view_files.empty()) throw ParseError(path.string() + ": manifest lists no view files");
    return m;
}

inline void write_manifest(const fs::path& path, const DatasetManifest& m) {
    json doc;
    doc["name"] = m.name;
    doc["views"] = json::array();
    for (const auto& v : m.view_files) doc["views"].push_back(v.generic_string());
    doc["labels"] = m.label_file ? json(m.label_file->generic_string()) : json(nullptr);
    doc["k_true"] = m.k_true ? json(*m.k_true) : json(nullptr);
    doc["delimiter"] = std::string(1, m.delimiter);
    doc["has_header"] = m.has_header;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

inline MultiViewDataset load(const DatasetManifest& manifest) {
    MultiViewDataset data;
    data.name = manifest.name;
    const CsvOptions options{manifest.delimiter, manifest.has_header};
    for (const auto& file : manifest.view_files) {
        if (!fs::exists(file)) throw IoError("view file not found: " + file.string());
        data.views.push_back(read_csv(file, options));
        if (data.views.back().rows() != data.views.front().rows())
            throw ParseError(file.string() + ": " + std::to_string(data.views.back().rows()) + " rows, but " +
                             manifest.view_files.front().string() + " has " +
                             std::to_string(data.views.front().rows()));
    }
    if (manifest.label_file) {
        if (!fs::exists(*manifest.label_file)) throw IoError("label file not found: " + manifest.label_file->string());
        auto labels = read_labels(*manifest.label_file, options);
        if (labels.size() != data.num_rows())
            throw ParseError(manifest.label_file->string() + ": " + std::to_string(labels.size()) +
                             " labels for " + std::to_string(data.num_rows()) + " rows");
        data.labels = std::move(labels);
    }
    validate_dataset(data);
    return data;
}

inline MultiViewDataset load(const fs::path& manifest_path) { return load(read_manifest(manifest_path)); }

/// Writes view_<v>.csv, labels.csv (if any) and manifest.json into a directory.
inline DatasetManifest save_dataset(const MultiViewDataset& data, const fs::path& dir) {
    fs::create_directories(dir);
    DatasetManifest m;
    m.name = data.name;
    for (std::size_t v = 0; v < data.views.size(); ++v) {
        const std::string file = "view_" + std::to_string(v + 1) + ".csv";
        write_csv(dir / file, data.views[v]);
        m.view_files.push_back(file);
    }
    if (data.labels) {
        write_labels(dir / "labels.csv", *data.labels);
        m.label_file = "labels.csv";
        m.k_true = 1 + *std::max_element(data.labels->begin(), data.labels->end());
    }
    write_manifest(dir / "manifest.json", m);
    return m;
}

/**
 * QCM sensor data: 125 rows, 10 feature columns followed by 5 one-hot class columns.
 * The class columns are dropped and rows are labeled in blocks of 25 (rows 1-25 -> 1,
 * ..., 101-125 -> 5). Delimiter (';' or ',') and a header line are detected.
 */
inline MultiViewDataset load_qcm(const fs::path& path) {
    const std::string text = detail::read_file(path);
    const auto lines = detail::split_lines(text);
    if (lines.empty()) throw ParseError(path.string() + ": empty file");
    CsvOptions options;
    options.delimiter = lines.front().find(';') != std::string_view::npos ? ';' : ',';
    const auto first = detail::trim(lines.front().substr(0, lines.front().find(options.delimiter)));
    double probe = 0.0;
    const auto [ptr, ec] = std::from_chars(first.data(), first.data() + first.size(), probe);
    options.has_header = ec != std::errc() || ptr != first.data() + first.size();

    const Matrix raw = read_csv(path, options);
    if (raw.rows() != 125)
        throw ParseError(path.string() + ": QCM file must have 125 data rows, found " + std::to_string(raw.rows()));
    if (raw.cols() < 15)
        throw ParseError(path.string() + ": QCM file must have at least 15 columns, found " + std::to_string(raw.cols()));

    MultiViewDataset data;
    data.name = "qcm";
    data.views.push_back(raw.leftCols(10));
    std::vector<int> labels(125);
    for (int i = 0; i < 125; ++i) labels[static_cast<std::size_t>(i)] = i / 25;
    data.labels = std::move(labels);
    validate_dataset(data);
    return data;
}

namespace detail {

inline json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Matrix matrix_from_json(const json& rows, Eigen::Index cols_if_empty = 0) {
    const auto r = static_cast<Eigen::Index>(rows.size());
    const auto c = r > 0 ? static_cast<Eigen::Index>(rows.front().size()) : cols_if_empty;
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
        if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != c)
            throw ParseError("ragged matrix in result JSON");
        for (Eigen::Index j = 0; j < c; ++j)
            m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].get<double>();
    }
    return m;
}

inline json optional_number(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

} // namespace detail

inline json hyper_to_json(const HyperParams& h) {
    json j;
    j["K"] = h.k;
    j["yita"] = h.eta;
    j["r"] = h.r;
    j["gamma"] = detail::optional_number(h.gamma);
    j["epsilon"] = h.epsilon;
    j["max_iter"] = h.max_iter;
    j["chushi"] = h.chushi ? json(*h.chushi) : json(nullptr);
    j["seed"] = h.seed;
    return j;
}

inline HyperParams hyper_from_json(const json& j) {
    HyperParams h;
    h.k = j.at("K").get<int>();
    h.eta = j.at("yita").get<double>();
    h.r = j.at("r").get<double>();
    if (!j.at("gamma").is_null()) h.gamma = j["gamma"].get<double>();
    h.epsilon = j.at("epsilon").get<double>();
    h.max_iter = j.at("max_iter").get<int>();
    if (!j.at("chushi").is_null()) h.chushi = j["chushi"].get<int>();
    h.seed = j.at("seed").get<std::uint64_t>();
    return h;
}

inline json result_to_json(const ClusterResult& r) {
    json doc;
    json labels = json::array();
    for (int l : r.assignment.hard_labels) labels.push_back(l + 1);
    doc["result"] = std::move(labels);
    doc["U"] = detail::matrix_to_json(r.assignment.entries);
    json weight = json::array();
    for (Eigen::Index v = 0; v < r.weights.alpha.size(); ++v) weight.push_back(r.weights.alpha(v));
    doc["weight"] = std::move(weight);
    json center = json::array();
    for (const auto& c : r.centers.centers) center.push_back(detail::matrix_to_json(c));
    doc["center"] = std::move(center);
    doc["center_nonneg"] = r.centers.nonneg_enforced;
    doc["nmi"] = detail::optional_number(r.nmi);
    doc["objective_trace"] = r.objective_trace;
    doc["elapsed_seconds"] = r.elapsed_seconds;
    json config = hyper_to_json(r.hyper);
    config["algorithm"] = r.algorithm;
    doc["config"] = std::move(config);
    doc["warnings"] = r.diagnostics.warnings;
    doc["iterations"] = r.diagnostics.iterations;
    doc["converged"] = r.diagnostics.converged;
    return doc;
}

inline ClusterResult result_from_json(const json& doc) {
    try {
        ClusterResult r;
        const auto& config = doc.at("config");
        r.algorithm = config.at("algorithm").get<std::string>();
        r.hyper = hyper_from_json(config);
        r.assignment.entries = detail::matrix_from_json(doc.at("U"), r.hyper.k);
        for (const auto& l : doc.at("result")) r.assignment.hard_labels.push_back(l.get<int>() - 1);
        const auto& weight = doc.at("weight");
        r.weights.alpha.resize(static_cast<Eigen::Index>(weight.size()));
        for (std::size_t v = 0; v < weight.size(); ++v) r.weights.alpha(static_cast<Eigen::Index>(v)) = weight[v].get<double>();
        r.weights.r = r.hyper.r;
        for (const auto& c : doc.at("center")) r.centers.centers.push_back(detail::matrix_from_json(c));
        r.centers.nonneg_enforced = doc.value("center_nonneg", false);
        if (!doc.at("nmi").is_null()) r.nmi = doc["nmi"].get<double>();
        r.objective_trace = doc.at("objective_trace").get<std::vector<double>>();
        r.elapsed_seconds = doc.at("elapsed_seconds").get<double>();
        r.diagnostics.warnings = doc.value("warnings", std::vector<std::string>{});
        r.diagnostics.iterations = doc.value("iterations", 0);
        r.diagnostics.converged = doc.value("converged", false);
        return r;
    } catch (const json::exception& e) {
        throw ParseError(std::string("result JSON: ") + e.what());
    }
}

/// Writes the result document; doubles use the shortest round-trip form (<= 17 significant digits).
inline void save_result(const ClusterResult& result, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << result_to_json(result).dump(2) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

inline ClusterResult load_result(const fs::path& path) {
    json doc;
    try {
        doc = json::parse(detail::read_file(path));
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return result_from_json(doc);
}

/// Search path for external datasets: $ORKM_DATA_DIR if set, then ./data.
inline std::vector<fs::path> data_dirs() {
    std::vector<fs::path> dirs;
    if (const char* env = std::getenv("ORKM_DATA_DIR"); env && *env) dirs.emplace_back(env);
    dirs.emplace_back("data");
    return dirs;
}

/// First existing `dir/name` over data_dirs() and the candidate names.
inline std::optional<fs::path> find_data_file(const std::vector<std::string>& names) {
    for (const auto& dir : data_dirs())
        for (const auto& name : names) {
            std::error_code ec;
            if (fs::is_regular_file(dir / name, ec)) return dir / name;
        }
    return std::nullopt;
}

inline std::optional<fs::path> find_qcm() { return find_data_file({"QCM.csv", "qcm.csv", "QCM3.csv"}); }
inline std::optional<fs::path> find_movie_manifest() { return find_data_file({"movie/manifest.json", "movie.manifest.json"}); }

} // namespace orkm::io
