#pragma once

#include <charconv>
#include <cstddef>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include "mkfk/core.hpp"

namespace mkfk::csv {

/// Shortest decimal text that parses back to exactly `v`.
inline std::string format(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  if (res.ec != std::errc{}) throw std::runtime_error("float formatting failed");
  return std::string(buf, res.ptr);
}

inline double parse(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first < last && (*first == ' ' || *first == '\t')) ++first;
  while (last > first && (last[-1] == ' ' || last[-1] == '\t' || last[-1] == '\r')) --last;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last) throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

inline std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

/// Column-oriented table with a header row.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }

  const std::vector<double>& column(const std::string& name) const {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (header[c] == name) return columns[c];
    throw std::invalid_argument("no column '" + name + "'");
  }
};

inline void write(std::ostream& out, const Table& t) {
  for (std::size_t c = 0; c < t.header.size(); ++c) out << (c ? "," : "") << t.header[c];
  out << '\n';
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.columns.size(); ++c) out << (c ? "," : "") << format(t.columns[c][r]);
    out << '\n';
  }
}

inline void write_file(const std::string& path, const Table& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  write(out, t);
}

inline Table read(std::istream& in) {
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  t.header = split(line);
  t.columns.assign(t.header.size(), {});
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != t.header.size()) throw std::invalid_argument("ragged CSV row: " + line);
    for (std::size_t c = 0; c < cells.size(); ++c) t.columns[c].push_back(parse(cells[c]));
  }
  return t;
}

inline Table read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  return read(in);
}

/// Snapshot layout shared by the particle engine and the reference solver:
/// columns x, density.
inline Table density_table(const DensityField& f) {
  return Table{{"x", "density"}, {f.grid.nodes(), f.values}};
}

/// Inverse of density_table. The grid is recovered from the x column and must
/// be uniform.
inline DensityField density_from_table(const Table& t) {
  const auto& x = t.column("x");
  const auto& v = t.column("density");
  if (x.size() < 3) throw std::invalid_argument("density snapshot needs at least 3 rows");
  const double h = (x.back() - x.front()) / static_cast<double>(x.size() - 1);
  for (std::size_t g = 1; g < x.size(); ++g)
    if (std::abs((x[g] - x[g - 1]) - h) > 1e-9 * std::max(1.0, h))
      throw std::invalid_argument("density snapshot grid is not uniform");
  return DensityField{Grid1D{x.front(), h, x.size()}, v};
}

}  // namespace mkfk::csv
