#include "trajgen/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace trajgen {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path + " for reading");
    return in;
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

[[noreturn]] void fail_at(const std::string& path, int line, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

/** Header of the form key1=v1,key2=v2,...; returns the key/value pairs in order. */
std::map<std::string, std::string> parse_header_line(const std::string& line, const std::string& path, int lineno) {
    std::map<std::string, std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) fail_at(path, lineno, "expected key=value, got '" + item + "'");
        out[trim(item.substr(0, eq))] = trim(item.substr(eq + 1));
    }
    return out;
}

int header_int(const std::map<std::string, std::string>& hdr, const std::string& key,
               const std::string& path, int lineno) {
    const auto it = hdr.find(key);
    if (it == hdr.end()) fail_at(path, lineno, "missing header field '" + key + "'");
    try {
        return std::stoi(it->second);
    } catch (const std::exception&) {
        fail_at(path, lineno, "field '" + key + "' is not an integer");
    }
}

Eigen::MatrixXd read_matrix_rows(std::ifstream& in, const std::string& path, int& lineno,
                                 int rows, int cols) {
    Eigen::MatrixXd mat(rows, cols);
    std::string line;
    for (int r = 0; r < rows; ++r) {
        if (!std::getline(in, line)) fail_at(path, lineno, "unexpected end of file, expected matrix row");
        ++lineno;
        const auto fields = split_csv_line(line);
        if (static_cast<int>(fields.size()) != cols)
            fail_at(path, lineno, "expected " + std::to_string(cols) + " fields, got " + std::to_string(fields.size()));
        for (int c = 0; c < cols; ++c)
            mat(r, c) = parse_value(fields[static_cast<std::size_t>(c)], path + ":" + std::to_string(lineno));
    }
    return mat;
}

}  // namespace

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

double parse_value(const std::string& field, const std::string& context) {
    char* end = nullptr;
    const double v = std::strtod(field.c_str(), &end);
    if (end == field.c_str() || *end != '\0')
        throw std::runtime_error(context + ": '" + field + "' is not a number");
    return v;
}

void write_record_csv(const std::string& path, const DataRecord& record) {
    auto out = open_out(path);
    const int m = static_cast<int>(record.u.rows()), q = static_cast<int>(record.y.rows());
    out << "k";
    for (int i = 0; i < m; ++i) out << ",u_" << i;
    for (int i = 0; i < q; ++i) out << ",y_" << i;
    out << "\n";
    for (int k = 0; k < record.length(); ++k) {
        out << k;
        for (int i = 0; i < m; ++i) out << "," << format_value(record.u(i, k));
        for (int i = 0; i < q; ++i) out << "," << format_value(record.y(i, k));
        out << "\n";
    }
}

namespace {

DataRecord read_record_like(const std::string& path) {
    auto in = open_in(path);
    int lineno = 0;
    std::string line;
    if (!std::getline(in, line)) fail_at(path, 1, "empty file");
    ++lineno;
    const auto header = split_csv_line(line);
    if (header.empty() || header[0] != "k") fail_at(path, lineno, "header must start with 'k'");
    int m = 0, q = 0;
    for (std::size_t i = 1; i < header.size(); ++i) {
        if (header[i] == "u_" + std::to_string(m)) {
            if (q > 0) fail_at(path, lineno, "input columns must precede output columns");
            ++m;
        } else if (header[i] == "y_" + std::to_string(q)) {
            ++q;
        } else {
            fail_at(path, lineno, "unexpected column '" + header[i] + "'");
        }
    }
    if (m == 0 || q == 0) fail_at(path, lineno, "need at least one input and one output column");

    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        if (static_cast<int>(fields.size()) != 1 + m + q)
            fail_at(path, lineno, "expected " + std::to_string(1 + m + q) + " fields");
        const double k = parse_value(fields[0], path + ":" + std::to_string(lineno));
        if (static_cast<int>(k) != static_cast<int>(rows.size()))
            fail_at(path, lineno, "sample index out of order");
        std::vector<double> vals;
        vals.reserve(static_cast<std::size_t>(m + q));
        for (int i = 0; i < m + q; ++i)
            vals.push_back(parse_value(fields[static_cast<std::size_t>(1 + i)], path + ":" + std::to_string(lineno)));
        rows.push_back(std::move(vals));
    }
    DataRecord rec;
    rec.u.resize(m, static_cast<int>(rows.size()));
    rec.y.resize(q, static_cast<int>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
        for (int i = 0; i < m; ++i) rec.u(i, static_cast<int>(k)) = rows[k][static_cast<std::size_t>(i)];
        for (int i = 0; i < q; ++i) rec.y(i, static_cast<int>(k)) = rows[k][static_cast<std::size_t>(m + i)];
    }
    return rec;
}

}  // namespace

DataRecord read_record_csv(const std::string& path) { return read_record_like(path); }

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
    DataRecord rec;
    rec.u = traj.u;
    rec.y = traj.y;
    write_record_csv(path, rec);
}

Trajectory read_trajectory_csv(const std::string& path) {
    const DataRecord rec = read_record_like(path);
    Trajectory traj;
    traj.u = rec.u;
    traj.y = rec.y;
    return traj;
}

void write_training_log_csv(const std::string& path, const TrainingLog& log) {
    auto out = open_out(path);
    out << "episode,mean_cost,sigma,physical_samples,generated_samples,wall_ms\n";
    for (const auto& row : log.rows) {
        out << row.episode << "," << format_value(row.mean_cost) << "," << format_value(row.sigma)
            << "," << row.physical_samples << "," << row.generated_samples << ","
            << format_value(row.wall_ms) << "\n";
    }
}

void write_plant_file(const std::string& path, const LtiSystem& sys) {
    auto out = open_out(path);
    out << "n=" << sys.n() << ",m=" << sys.m() << ",q=" << sys.q() << "\n";
    const auto dump = [&](const char* name, const Eigen::MatrixXd& mat) {
        out << name << "\n";
        for (int r = 0; r < mat.rows(); ++r) {
            for (int c = 0; c < mat.cols(); ++c) out << (c ? "," : "") << format_value(mat(r, c));
            out << "\n";
        }
    };
    dump("A", sys.A());
    dump("B", sys.B());
    dump("C", sys.C());
}

LtiSystem read_plant_file(const std::string& path) {
    auto in = open_in(path);
    int lineno = 0;
    std::string line;
    if (!std::getline(in, line)) fail_at(path, 1, "empty file");
    ++lineno;
    const auto hdr = parse_header_line(trim(line), path, lineno);
    const int n = header_int(hdr, "n", path, lineno);
    const int m = header_int(hdr, "m", path, lineno);
    const int q = header_int(hdr, "q", path, lineno);
    if (n < 1 || m < 1 || q < 1) fail_at(path, lineno, "dimensions must be positive");

    Eigen::MatrixXd A, B, C;
    for (const char* expect : {"A", "B", "C"}) {
        if (!std::getline(in, line)) fail_at(path, lineno, std::string("missing '") + expect + "' marker");
        ++lineno;
        if (trim(line) != expect) fail_at(path, lineno, std::string("expected marker '") + expect + "'");
        const int rows = (expect[0] == 'C') ? q : n;
        const int cols = (expect[0] == 'A') ? n : (expect[0] == 'B' ? m : n);
        Eigen::MatrixXd mat = read_matrix_rows(in, path, lineno, rows, cols);
        if (expect[0] == 'A') A = mat;
        else if (expect[0] == 'B') B = mat;
        else C = mat;
    }
    return LtiSystem(A, B, C);
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& mat) {
    auto out = open_out(path);
    for (int r = 0; r < mat.rows(); ++r) {
        for (int c = 0; c < mat.cols(); ++c) out << (c ? "," : "") << format_value(mat(r, c));
        out << "\n";
    }
}

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
    auto in = open_in(path);
    int lineno = 0;
    std::string line;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        std::vector<double> vals;
        for (const auto& f : fields) vals.push_back(parse_value(f, path + ":" + std::to_string(lineno)));
        if (!rows.empty() && vals.size() != rows.front().size())
            fail_at(path, lineno, "ragged rows");
        rows.push_back(std::move(vals));
    }
    if (rows.empty()) fail_at(path, lineno, "empty matrix");
    Eigen::MatrixXd mat(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows.front().size(); ++c)
            mat(static_cast<int>(r), static_cast<int>(c)) = rows[r][c];
    return mat;
}

void write_window_file(const std::string& path, const ExtendedState& chi) {
    auto out = open_out(path);
    const int t0 = static_cast<int>(chi.y_window.cols());
    out << "t0=" << t0 << ",m=" << chi.u_window.rows() << ",q=" << chi.y_window.rows() << "\n";
    const Eigen::VectorXd flat = chi.flatten();
    for (int i = 0; i < flat.size(); ++i) out << (i ? "," : "") << format_value(flat(i));
    out << "\n";
}

ExtendedState read_window_file(const std::string& path) {
    auto in = open_in(path);
    int lineno = 0;
    std::string line;
    if (!std::getline(in, line)) fail_at(path, 1, "empty file");
    ++lineno;
    const auto hdr = parse_header_line(trim(line), path, lineno);
    const int t0 = header_int(hdr, "t0", path, lineno);
    const int m = header_int(hdr, "m", path, lineno);
    const int q = header_int(hdr, "q", path, lineno);
    if (!std::getline(in, line)) fail_at(path, lineno, "missing value line");
    ++lineno;
    const auto fields = split_csv_line(trim(line));
    const int expect = t0 * q + (t0 - 1) * m;
    if (static_cast<int>(fields.size()) != expect)
        fail_at(path, lineno, "expected " + std::to_string(expect) + " values");
    Eigen::VectorXd flat(expect);
    for (int i = 0; i < expect; ++i)
        flat(i) = parse_value(fields[static_cast<std::size_t>(i)], path + ":" + std::to_string(lineno));
    return ExtendedState::from_flat(flat, t0, m, q);
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
    auto in = open_in(path);
    int lineno = 0;
    std::string line;
    std::map<std::string, std::string> out;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail_at(path, lineno, "expected key=value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) fail_at(path, lineno, "empty key");
        out[key] = trim(line.substr(eq + 1));
    }
    return out;
}

}  // namespace trajgen
