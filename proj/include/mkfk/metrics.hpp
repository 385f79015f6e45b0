#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mkfk/config.hpp"
#include "mkfk/core.hpp"
#include "mkfk/fields.hpp"
#include "mkfk/particles.hpp"
#include "mkfk/pde.hpp"

namespace mkfk {

enum class Norm { l1, l2, sup };

inline void require_same_grid(const DensityField& a, const DensityField& b) {
  if (!nearly_same_grid(a.grid, b.grid) || a.values.size() != b.values.size())
    throw GridMismatch("density fields live on different grids");
}

/// Trapezoid L1 / L2 norm of a - b, or the largest nodal gap.
inline double density_distance(const DensityField& a, const DensityField& b, Norm norm) {
  require_same_grid(a, b);
  std::vector<double> d(a.values.size());
  for (std::size_t g = 0; g < d.size(); ++g) d[g] = std::abs(a.values[g] - b.values[g]);
  switch (norm) {
    case Norm::l1: return trapezoid(a.grid, d);
    case Norm::l2: {
      for (double& x : d) x *= x;
      return std::sqrt(trapezoid(a.grid, d));
    }
    case Norm::sup: return d.empty() ? 0.0 : *std::max_element(d.begin(), d.end());
  }
  return 0.0;
}

inline double total_mass(const DensityField& f) { return trapezoid(f.grid, f.values); }

/// Distances between two density series recorded at the same times.
struct ComparisonReport {
  std::vector<double> times;
  std::vector<double> l1;
  std::vector<double> l2;
  std::vector<double> sup;
  std::vector<double> mass_a;
  std::vector<double> mass_b;
};

inline ComparisonReport compare_series(const std::vector<double>& times, const std::vector<DensityField>& a,
                                       const std::vector<DensityField>& b) {
  if (a.size() != b.size() || a.size() != times.size())
    throw GridMismatch("compared series have different lengths");
  ComparisonReport r;
  r.times = times;
  for (std::size_t k = 0; k < a.size(); ++k) {
    r.l1.push_back(density_distance(a[k], b[k], Norm::l1));
    r.l2.push_back(density_distance(a[k], b[k], Norm::l2));
    r.sup.push_back(density_distance(a[k], b[k], Norm::sup));
    r.mass_a.push_back(total_mass(a[k]));
    r.mass_b.push_back(total_mass(b[k]));
  }
  return r;
}

/// Sample mean and standard error of the mean.
struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
};

inline MeanStderr mean_stderr(std::vector<double> xs) {
  // Sorting fixes the reduction order regardless of how xs was produced.
  std::sort(xs.begin(), xs.end());
  MeanStderr r;
  if (xs.empty()) return r;
  double s = 0.0;
  for (double x : xs) s += x;
  r.mean = s / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double q = 0.0;
    for (double x : xs) q += (x - r.mean) * (x - r.mean);
    r.stderr_ = std::sqrt(q / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
  }
  return r;
}

struct ConvergenceRow {
  std::size_t particles = 0;
  MeanStderr fk;
  MeanStderr killed;
  std::vector<double> fk_errors;      // per seed
  std::vector<double> killed_errors;  // per seed
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  double reference_mass = 0.0;
};

/// Final-time L1 distance between each estimator and K * v (the reference
/// mollified with the same kernel), averaged over seeds base.seed + j,
/// j = 0 .. seeds-1, for every N.
inline ConvergenceTable convergence_study(const SimConfig& base, const std::vector<std::size_t>& particle_counts,
                                          std::size_t seeds) {
  validate_config(base);
  if (seeds == 0) throw ConfigError("convergence study needs at least one seed");
  const PdeOutput reference = solve_pde(base, step_count(base));
  const DensityField& target = reference.mollified.back();

  ConvergenceTable table;
  table.reference_mass = reference.mass.back();
  for (std::size_t n : particle_counts) {
    ConvergenceRow row;
    row.particles = n;
    for (std::size_t j = 0; j < seeds; ++j) {
      for (Mode mode : {Mode::feynman_kac, Mode::killed}) {
        SimConfig c = base;
        c.particles = n;
        c.seed = base.seed + j;
        c.mode = mode;
        RunOptions opt;
        opt.snapshot_stride = step_count(c);
        const auto run = run_simulation(c, opt);
        const double err = density_distance(run.densities.back(), target, Norm::l1);
        (mode == Mode::feynman_kac ? row.fk_errors : row.killed_errors).push_back(err);
      }
    }
    row.fk = mean_stderr(row.fk_errors);
    row.killed = mean_stderr(row.killed_errors);
    table.rows.push_back(std::move(row));
  }
  return table;
}

/// True when mean errors never increase by more than two combined standard
/// errors from one N to the next.
inline bool non_increasing_within_2se(const std::vector<MeanStderr>& series) {
  for (std::size_t k = 1; k < series.size(); ++k) {
    const double slack = 2.0 * std::hypot(series[k].stderr_, series[k - 1].stderr_);
    if (series[k].mean > series[k - 1].mean + slack) return false;
  }
  return true;
}

/// Count of recorded times where |a - b| > 3 sqrt(variance / N).
inline std::size_t band_exceedances(const std::vector<double>& a, const std::vector<double>& b,
                                    const std::vector<double>& variance, std::size_t n) {
  std::size_t out = 0;
  for (std::size_t k = 0; k < a.size(); ++k)
    if (std::abs(a[k] - b[k]) > 3.0 * std::sqrt(variance[k] / static_cast<double>(n))) ++out;
  return out;
}

}  // namespace mkfk
