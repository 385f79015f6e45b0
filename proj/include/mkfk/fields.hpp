#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "mkfk/core.hpp"
#include "mkfk/csv.hpp"
#include "mkfk/dynamics.hpp"
#include "mkfk/kernel.hpp"

namespace mkfk {

/// Grid samples of A(t, x) = int_0^t u(r, x) dr and G(t, x) = int_0^t u_x(r, x) dr,
/// accumulated with the left-endpoint rule.
struct AccumulatedFields {
  Grid1D grid;
  double bandwidth = 0.0;
  std::vector<double> A;
  std::vector<double> G;
  double dt = 0.0;
  std::size_t steps = 0;

  AccumulatedFields() = default;
  AccumulatedFields(Grid1D g, double delta)
      : grid(g), bandwidth(delta), A(g.count, 0.0), G(g.count, 0.0) {}

  double time() const noexcept { return static_cast<double>(steps) * dt; }
};

inline bool nearly_same_grid(const Grid1D& a, const Grid1D& b) {
  return a.count == b.count && std::abs(a.lower - b.lower) <= 1e-9 * std::max(1.0, std::abs(a.lower)) &&
         std::abs(a.spacing - b.spacing) <= 1e-9 * a.spacing;
}

/// Adds dt * (u, u_x) of `cloud` at every node and advances time by dt.
/// Returns the nodal density and gradient that were added (before scaling by dt).
inline GridMollification accumulate_step(AccumulatedFields& fields, const WeightedPointCloud& cloud,
                                         std::size_t ensemble_size, double bandwidth, double dt) {
  if (bandwidth != fields.bandwidth)
    throw std::invalid_argument("accumulate_step: bandwidth differs from the one the fields were built with");
  if (cloud.positions.size() != cloud.weights.size())
    throw std::invalid_argument("accumulate_step: cloud positions and weights differ in length");
  if (!(dt > 0.0)) throw std::invalid_argument("accumulate_step: dt must be positive");
  if (fields.steps > 0 && dt != fields.dt)
    throw std::invalid_argument("accumulate_step: dt changed between steps");

  auto m = mollify_on_grid(fields.grid, cloud, GaussianKernel(bandwidth), ensemble_size);
  for (std::size_t g = 0; g < fields.grid.count; ++g) {
    fields.A[g] += dt * m.value[g];
    fields.G[g] += dt * m.gradient[g];
  }
  fields.dt = dt;
  ++fields.steps;
  return m;
}

/// Piecewise-linear interpolation of nodal values at x. Outside the grid the
/// nearest boundary value is returned and `outside` is set.
inline double interpolate_nodal(const Grid1D& grid, std::span<const double> values, double x,
                                bool& outside) {
  outside = !(x >= grid.lower && x <= grid.upper());
  if (outside) return x > grid.lower ? values[grid.count - 1] : values[0];
  const double s = (x - grid.lower) / grid.spacing;
  std::size_t g = static_cast<std::size_t>(s);
  if (g > grid.count - 2) g = grid.count - 2;
  if (x == grid.node(g + 1)) return values[g + 1];
  const double f = (x - grid.node(g)) / grid.spacing;
  return (1.0 - f) * values[g] + f * values[g + 1];
}

/// (I, J) at position x by linear interpolation between bracketing nodes.
/// Exact at nodes. Off the grid the boundary node values are returned and
/// `*out_of_domain` (when given) is incremented.
inline DriftArgs interpolate(const AccumulatedFields& fields, double x,
                             std::size_t* out_of_domain = nullptr) {
  bool outside = false;
  DriftArgs out;
  out.integral = interpolate_nodal(fields.grid, fields.A, x, outside);
  out.gradient = interpolate_nodal(fields.grid, fields.G, x, outside);
  if (outside && out_of_domain) ++*out_of_domain;
  return out;
}

/// Full per-step record of the ensemble: snapshot k is the state at time k dt.
/// Every snapshot holds all N particles; dead particles carry weight 0.
struct TrajectoryArchive {
  double dt = 0.0;
  std::size_t ensemble_size = 0;
  std::vector<WeightedPointCloud> snapshots;

  std::size_t steps() const noexcept { return snapshots.empty() ? 0 : snapshots.size() - 1; }
};

/// Direct evaluation of the time integrals from an archive:
/// I = sum_{k < count} dt * mollify(snapshot_k, x), J likewise with the
/// gradient. `count` defaults to every archived snapshot. No spatial
/// interpolation is involved, which makes this the oracle for the grid
/// accumulator.
inline DriftArgs exact_history_args(const TrajectoryArchive& archive, double x, double bandwidth,
                                    std::size_t ensemble_size, std::size_t count) {
  if (archive.snapshots.empty()) throw std::invalid_argument("exact_history_args: empty archive");
  if (count > archive.snapshots.size())
    throw std::invalid_argument("exact_history_args: more snapshots requested than archived");
  const GaussianKernel kernel(bandwidth);
  DriftArgs out;
  for (std::size_t k = 0; k < count; ++k) {
    out.integral += archive.dt * mollify(archive.snapshots[k], kernel, x, ensemble_size);
    out.gradient += archive.dt * mollify_grad(archive.snapshots[k], kernel, x, ensemble_size);
  }
  return out;
}

inline DriftArgs exact_history_args(const TrajectoryArchive& archive, double x, double bandwidth,
                                    std::size_t ensemble_size) {
  if (archive.snapshots.empty()) throw std::invalid_argument("exact_history_args: empty archive");
  return exact_history_args(archive, x, bandwidth, ensemble_size, archive.snapshots.size());
}

/// Columns x, A, G.
inline csv::Table fields_table(const AccumulatedFields& f) {
  return csv::Table{{"x", "A", "G"}, {f.grid.nodes(), f.A, f.G}};
}

}  // namespace mkfk
