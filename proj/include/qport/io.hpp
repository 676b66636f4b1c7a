#pragma once

// Plain-text formats for return matrices:
//   matrix file:    one line per asset, p comma-separated reals
//   variances file: one real per line

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "qport/core.hpp"

namespace qport::io {

/// Shortest decimal text that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text, const std::string& context) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
    text.remove_suffix(1);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
    throw ParseError(context + ": not a number: '" + std::string(text) + "'");
  return v;
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  return in;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  return out;
}

inline Matrix read_matrix_csv(std::istream& in, const std::string& name = "matrix") {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    std::string_view rest(line);
    const std::string ctx = name + ":" + std::to_string(lineno);
    for (;;) {
      const auto comma = rest.find(',');
      row.push_back(parse_double(rest.substr(0, comma), ctx));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError(ctx + ": expected " + std::to_string(rows.front().size()) +
                       " entries, found " + std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(name + ": no rows");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

inline Vector read_vector_lines(std::istream& in, const std::string& name = "variances") {
  std::vector<double> values;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    values.push_back(parse_double(line, name + ":" + std::to_string(lineno)));
  }
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

inline void write_matrix_csv(std::ostream& out, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

inline void write_vector_lines(std::ostream& out, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) out << format_double(v[i]) << '\n';
}

inline Matrix load_matrix(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_matrix_csv(in, path.string());
}

inline Vector load_vector(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_vector_lines(in, path.string());
}

/// Per-row mean of x^2, used when no variances file accompanies a matrix.
inline Vector empirical_variances(const Matrix& entries) {
  return entries.rowwise().squaredNorm() / static_cast<double>(entries.cols());
}

inline ReturnMatrix load_return_matrix(const std::filesystem::path& matrix_path,
                                       const std::filesystem::path& variances_path = {}) {
  Matrix entries = load_matrix(matrix_path);
  Vector variances = variances_path.empty() ? empirical_variances(entries) : load_vector(variances_path);
  return ReturnMatrix(std::move(entries), std::move(variances));
}

inline void save_return_matrix(const ReturnMatrix& X, const std::filesystem::path& matrix_path,
                               const std::filesystem::path& variances_path) {
  auto m = open_output(matrix_path);
  write_matrix_csv(m, X.entries());
  auto v = open_output(variances_path);
  write_vector_lines(v, X.variances());
}

}  // namespace qport::io
