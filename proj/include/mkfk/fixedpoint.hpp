#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "mkfk/core.hpp"
#include "mkfk/fields.hpp"
#include "mkfk/kernel.hpp"

namespace mkfk {

/// Candidate u on the time-space lattice {k dt : k = 0..steps} x grid,
/// stored row-major by time.
struct IterateFunction {
  Grid1D grid;
  std::size_t steps = 0;
  double dt = 0.0;
  std::vector<double> values;

  static IterateFunction zero(const Grid1D& grid, std::size_t steps, double dt) {
    return {grid, steps, dt, std::vector<double>((steps + 1) * grid.count, 0.0)};
  }

  std::span<const double> row(std::size_t k) const {
    return {values.data() + k * grid.count, grid.count};
  }
  double at(std::size_t k, std::size_t g) const { return values[k * grid.count + g]; }
};

inline double sup_distance(const IterateFunction& a, const IterateFunction& b) {
  if (a.values.size() != b.values.size()) throw GridMismatch("sup_distance: lattice shapes differ");
  double d = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) d = std::max(d, std::abs(a.values[i] - b.values[i]));
  return d;
}

inline void check_full_paths(const TrajectoryArchive& archive) {
  if (archive.snapshots.empty()) throw std::invalid_argument("archive is empty");
  for (const auto& s : archive.snapshots) {
    if (s.size() != archive.ensemble_size) throw std::invalid_argument("archive snapshot has wrong particle count");
    for (double w : s.weights)
      if (!(w > 0.0)) throw std::invalid_argument("archive contains killed particles; full paths are required");
  }
}

/// One application of the McKean-Feynman-Kac map on the empirical path
/// measure of `archive`:
///   I_i(s)   = dt sum_{r<s} u(r, X_s^i)                (lattice interpolation)
///   D_i(t)   = exp(-lambda c0 dt sum_{s<t} exp(-lambda I_i(s)))
///   out(t,y) = (1/N) sum_i K(y - X_t^i) D_i(t)
inline IterateFunction apply_mkfk_map(const IterateFunction& u, const TrajectoryArchive& archive,
                                      double bandwidth, const PhysicalParams& p) {
  const std::size_t steps = archive.steps();
  const std::size_t n = archive.ensemble_size;
  const std::size_t m = u.grid.count;
  if (u.steps != steps || u.values.size() != (steps + 1) * m || u.dt != archive.dt)
    throw GridMismatch("apply_mkfk_map: lattice does not match the archive");
  if (n == 0) throw std::invalid_argument("apply_mkfk_map: empty ensemble");
  const double dt = archive.dt;

  // cumulative[s] = dt sum_{r<s} u_r on the grid
  std::vector<double> cumulative((steps + 1) * m, 0.0);
  for (std::size_t s = 1; s <= steps; ++s)
    for (std::size_t g = 0; g < m; ++g)
      cumulative[s * m + g] = cumulative[(s - 1) * m + g] + dt * u.at(s - 1, g);

  // discount[t * n + i]
  std::vector<double> discount((steps + 1) * n, 1.0);
  const double rate_scale = p.lambda * p.c0 * dt;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(n); ++si) {
    const auto i = static_cast<std::size_t>(si);
    double sum = 0.0;
    for (std::size_t t = 0; t <= steps; ++t) {
      discount[t * n + i] = std::exp(-rate_scale * sum);
      if (t == steps) break;
      bool outside = false;
      const std::span<const double> c(cumulative.data() + t * m, m);
      const double exposure = interpolate_nodal(u.grid, c, archive.snapshots[t].positions[i], outside);
      sum += std::exp(-p.lambda * exposure);
    }
  }

  IterateFunction out = IterateFunction::zero(u.grid, steps, dt);
  const GaussianKernel kernel(bandwidth);
  WeightedPointCloud cloud;
  cloud.weights.resize(n);
  for (std::size_t t = 0; t <= steps; ++t) {
    cloud.positions = archive.snapshots[t].positions;
    std::copy_n(discount.begin() + static_cast<std::ptrdiff_t>(t * n), n, cloud.weights.begin());
    const auto row = mollify_on_grid(u.grid, cloud, kernel, n).value;
    std::copy(row.begin(), row.end(), out.values.begin() + static_cast<std::ptrdiff_t>(t * m));
  }
  return out;
}

struct PicardResult {
  IterateFunction fixed_point;
  /// distances[k - 1] = sup |u_k - u_{k-1}|, k = 1, 2, ...
  std::vector<double> distances;
  bool converged = false;
  /// Index k of the iterate that was already a fixed point to within tol
  /// (u_{k+1} - u_k <= tol). Meaningful only when converged.
  std::size_t converged_iteration = 0;
};

/// Banach iteration u_{k+1} = map(u_k) from u_0 = 0 until the sup distance
/// drops to `tol` or `max_iters` maps have been applied. Non-convergence is
/// reported through the result, not thrown.
inline PicardResult picard_solve(const TrajectoryArchive& archive, const Grid1D& grid, double bandwidth,
                                 const PhysicalParams& p, std::size_t max_iters, double tol) {
  if (max_iters < 2) throw std::invalid_argument("picard_solve: max_iters must be >= 2");
  check_full_paths(archive);
  PicardResult r;
  IterateFunction current = IterateFunction::zero(grid, archive.steps(), archive.dt);
  for (std::size_t k = 1; k <= max_iters; ++k) {
    IterateFunction next = apply_mkfk_map(current, archive, bandwidth, p);
    r.distances.push_back(sup_distance(next, current));
    current = std::move(next);
    if (r.distances.back() <= tol) {
      r.converged = true;
      r.converged_iteration = k - 1;
      break;
    }
  }
  r.fixed_point = std::move(current);
  return r;
}

}  // namespace mkfk
