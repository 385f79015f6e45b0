#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "mkfk/fields.hpp"

namespace mkfk {

/// Binary trajectory archive, all fields little-endian:
///
///   offset  size  content
///   0       8     magic "MKFKARC1"
///   8       8     uint64 N (particles per snapshot)
///   16      8     uint64 steps (the file holds steps + 1 snapshots)
///   24      8     float64 dt
///   32      ...   for k = 0 .. steps: N float64 positions, then N float64 weights
///
/// Weights are the FK discounts, or 1 / 0 alive indicators for killed runs.
inline constexpr std::array<char, 8> archive_magic{'M', 'K', 'F', 'K', 'A', 'R', 'C', '1'};

namespace detail {

inline void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw std::runtime_error("truncated archive");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }
inline double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

}  // namespace detail

inline void write_archive(std::ostream& out, const TrajectoryArchive& a) {
  out.write(archive_magic.data(), archive_magic.size());
  detail::put_u64(out, a.ensemble_size);
  detail::put_u64(out, a.steps());
  detail::put_f64(out, a.dt);
  for (const auto& s : a.snapshots) {
    if (s.positions.size() != a.ensemble_size || s.weights.size() != a.ensemble_size)
      throw std::invalid_argument("archive snapshot size differs from N");
    for (double x : s.positions) detail::put_f64(out, x);
    for (double w : s.weights) detail::put_f64(out, w);
  }
}

inline TrajectoryArchive read_archive(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != archive_magic)
    throw std::runtime_error("not a trajectory archive (bad magic)");
  TrajectoryArchive a;
  a.ensemble_size = detail::get_u64(in);
  const std::uint64_t steps = detail::get_u64(in);
  a.dt = detail::get_f64(in);
  if (a.ensemble_size == 0 || !(a.dt > 0.0)) throw std::runtime_error("corrupt archive header");
  a.snapshots.resize(steps + 1);
  for (auto& s : a.snapshots) {
    s.positions.resize(a.ensemble_size);
    s.weights.resize(a.ensemble_size);
    for (double& x : s.positions) x = detail::get_f64(in);
    for (double& w : s.weights) w = detail::get_f64(in);
  }
  return a;
}

inline void write_archive_file(const std::string& path, const TrajectoryArchive& a) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_archive(out, a);
}

inline TrajectoryArchive read_archive_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  return read_archive(in);
}

}  // namespace mkfk
