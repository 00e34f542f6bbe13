#pragma once

#include <Eigen/Dense>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "metacond/errors.hpp"

namespace metacond {

struct CsvTable {
    std::vector<std::string> columns;
    Eigen::MatrixXd data;
};

namespace csv_detail {

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline std::string format_double(double v) {
    char buf[32];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

}  // namespace csv_detail

/// Strict numeric CSV: comma separated, '.' decimal, header row required,
/// every data row must have exactly as many cells as the header, every cell
/// must parse as a double. Diagnostics cite the 1-based file line and
/// column. CRLF endings are tolerated.
inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open '" + path + "'");

    std::string line;
    auto next_line = [&](std::string& out) {
        if (!std::getline(in, out)) return false;
        if (!out.empty() && out.back() == '\r') out.pop_back();
        return true;
    };

    if (!next_line(line) || line.empty())
        throw DomainError(path + ": missing header row");
    CsvTable table;
    table.columns = csv_detail::split_line(line);
    const std::size_t d = table.columns.size();

    std::vector<double> values;
    std::size_t n_rows = 0;
    for (std::size_t line_no = 2; next_line(line); ++line_no) {
        if (line.empty()) continue;  // ignore blank lines (e.g. trailing newline)
        const auto cells = csv_detail::split_line(line);
        if (cells.size() != d)
            throw DomainError(path + " line " + std::to_string(line_no) + ": expected " +
                              std::to_string(d) + " cells, found " +
                              std::to_string(cells.size()));
        for (std::size_t j = 0; j < d; ++j) {
            double v = 0.0;
            const char* first = cells[j].data();
            const char* last = first + cells[j].size();
            const auto [ptr, ec] = std::from_chars(first, last, v);
            if (ec != std::errc{} || ptr != last)
                throw DomainError(path + " line " + std::to_string(line_no) + ", column " +
                                  std::to_string(j + 1) + " ('" + cells[j] +
                                  "'): not a number");
            values.push_back(v);
        }
        ++n_rows;
    }
    table.data.resize(static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < n_rows; ++i)
        for (std::size_t j = 0; j < d; ++j)
            table.data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                values[i * d + j];
    return table;
}

/// Writes a header + matrix. Doubles are emitted in the shortest
/// representation that round-trips exactly, so re-reading reproduces the
/// matrix bit for bit.
inline void write_csv(const std::string& path, const std::vector<std::string>& columns,
                      const Eigen::MatrixXd& data) {
    if (data.cols() != static_cast<Eigen::Index>(columns.size()))
        throw UnsupportedShape("write_csv: header/data column mismatch");
    std::ofstream out(path);
    if (!out) throw DomainError("cannot write '" + path + "'");
    for (std::size_t j = 0; j < columns.size(); ++j)
        out << (j ? "," : "") << columns[j];
    out << '\n';
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        for (Eigen::Index j = 0; j < data.cols(); ++j)
            out << (j ? "," : "") << csv_detail::format_double(data(i, j));
        out << '\n';
    }
    if (!out) throw DomainError("write to '" + path + "' failed");
}

}  // namespace metacond
