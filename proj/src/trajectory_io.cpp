#include "sage/trajectory_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sage {

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.15g", v);
    return buf;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    return f;
}

}  // namespace

void write_csv(const std::string& path,
               const std::vector<std::string>& columns,
               const Matrix& rows,
               const std::vector<std::string>& metadata) {
    if (rows.size() > 0 && static_cast<size_t>(rows.cols()) != columns.size())
        throw std::invalid_argument("write_csv: column mismatch");
    std::ofstream f = open_out(path);
    for (const auto& m : metadata) f << "# " << m << "\n";
    for (size_t i = 0; i < columns.size(); ++i)
        f << (i ? "," : "") << columns[i];
    f << "\n";
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
        for (Eigen::Index c = 0; c < rows.cols(); ++c)
            f << (c ? "," : "") << format_value(rows(r, c));
        f << "\n";
    }
    if (!f) throw std::runtime_error("write failed: " + path);
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
    const int T = static_cast<int>(traj.inputs.rows());
    if (traj.outputs.rows() != T)
        throw std::invalid_argument("write_trajectory_csv: inputs/outputs row mismatch");
    std::vector<std::string> cols;
    cols.push_back("t");
    for (const auto& n : traj.input_names) cols.push_back(n);
    for (const auto& n : traj.output_names) cols.push_back(n);
    Matrix rows(T, 1 + traj.inputs.cols() + traj.outputs.cols());
    for (int t = 0; t < T; ++t) rows(t, 0) = t;
    rows.middleCols(1, traj.inputs.cols()) = traj.inputs;
    rows.rightCols(traj.outputs.cols()) = traj.outputs;
    write_csv(path, cols, rows,
              {"seed=" + std::to_string(traj.seed),
               "outputs=" + std::to_string(traj.outputs.cols())});
}

Trajectory read_trajectory_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open for reading: " + path);
    Trajectory traj;
    std::string line;
    std::vector<std::string> header;
    std::vector<std::vector<double>> data;
    long declared_outputs = -1;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            auto pos = line.find("seed=");
            if (pos != std::string::npos)
                traj.seed = std::stoull(line.substr(pos + 5));
            pos = line.find("outputs=");
            if (pos != std::string::npos)
                declared_outputs = std::stol(line.substr(pos + 8));
            continue;
        }
        if (header.empty()) {
            header = split_line(line);
            if (header.empty() || header[0] != "t")
                throw std::runtime_error("trajectory csv: first column must be t");
            continue;
        }
        const auto cells = split_line(line);
        if (cells.size() != header.size())
            throw std::runtime_error("trajectory csv: ragged row in " + path);
        std::vector<double> row(cells.size());
        for (size_t i = 0; i < cells.size(); ++i) {
            size_t used = 0;
            row[i] = std::stod(cells[i], &used);
            if (used == 0) throw std::runtime_error("trajectory csv: bad number");
        }
        data.push_back(std::move(row));
    }
    if (header.empty()) throw std::runtime_error("trajectory csv: missing header");

    // The "# outputs=" metadata line splits input columns from output columns;
    // files without it are treated as inputs-only.
    const size_t p = declared_outputs >= 0 ? static_cast<size_t>(declared_outputs) : 0;
    if (header.size() < 1 + p)
        throw std::runtime_error("trajectory csv: declared outputs exceed columns");
    const size_t q = header.size() - 1 - p;
    traj.input_names.assign(header.begin() + 1, header.begin() + 1 + q);
    traj.output_names.assign(header.begin() + 1 + q, header.end());
    const int T = static_cast<int>(data.size());
    traj.inputs.resize(T, q);
    traj.outputs.resize(T, p);
    for (int t = 0; t < T; ++t) {
        for (size_t j = 0; j < q; ++j) traj.inputs(t, j) = data[t][1 + j];
        for (size_t j = 0; j < p; ++j) traj.outputs(t, j) = data[t][1 + q + j];
    }
    return traj;
}

}  // namespace sage
