#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "mkfk/config.hpp"
#include "mkfk/core.hpp"
#include "mkfk/dynamics.hpp"
#include "mkfk/fields.hpp"
#include "mkfk/kernel.hpp"
#include "mkfk/parallel.hpp"
#include "mkfk/random.hpp"

namespace mkfk {

/// State of the N-particle system.
///
/// hazards[i] is the cumulative killing intensity Lambda_i (the second
/// component of the lifted process); weights[i] = exp(-hazards[i]) is the
/// Feynman-Kac discount. In killed mode a particle dies the first time its
/// hazard reaches its Exp(1) threshold; its position is then frozen and it
/// no longer contributes to any density.
struct ParticleEnsemble {
  Mode mode = Mode::feynman_kac;
  std::vector<double> positions;
  std::vector<double> hazards;
  std::vector<double> weights;
  std::vector<double> thresholds;
  std::vector<std::uint8_t> alive;
  std::vector<std::optional<double>> death_times;
  std::vector<std::uint64_t> stream_ids;

  std::size_t size() const noexcept { return positions.size(); }
};

/// Counters gathered while stepping.
struct StepDiagnostics {
  std::size_t out_of_domain_lookups = 0;
  std::size_t clamped_exposures = 0;
};

/// Draws initial positions i.i.d. from rho0 and Exp(1) thresholds, each from
/// the particle's own streams. `stream_ids` defaults to 0 .. N-1.
inline ParticleEnsemble init_ensemble(const SimConfig& config,
                                      std::span<const std::uint64_t> stream_ids = {}) {
  const std::size_t n = config.particles;
  if (n == 0) throw ConfigError("particle count N must be >= 1");
  if (!stream_ids.empty() && stream_ids.size() != n)
    throw std::invalid_argument("init_ensemble: need one stream id per particle");

  ParticleEnsemble e;
  e.mode = config.mode;
  e.positions.resize(n);
  e.hazards.assign(n, 0.0);
  e.weights.assign(n, 1.0);
  e.thresholds.resize(n);
  e.alive.assign(n, 1);
  e.death_times.assign(n, std::nullopt);
  e.stream_ids.resize(n);

  InitialSampler sampler(config.initial);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t id = stream_ids.empty() ? i : stream_ids[i];
    e.stream_ids[i] = id;
    auto pos_stream = make_stream(config.seed, StreamKind::initial_position, id);
    e.positions[i] = sampler(pos_stream);
    auto thr_stream = make_stream(config.seed, StreamKind::killing_threshold, id);
    e.thresholds[i] = std::exponential_distribution<double>(1.0)(thr_stream);
  }
  return e;
}

/// Field lookups used by the stepping routines: callables
/// DriftArgs(double x, bool& outside).
struct GridFieldLookup {
  const AccumulatedFields& fields;
  DriftArgs operator()(double x, bool& outside) const {
    DriftArgs a;
    a.integral = interpolate_nodal(fields.grid, fields.A, x, outside);
    a.gradient = interpolate_nodal(fields.grid, fields.G, x, outside);
    return a;
  }
};

struct ExactHistoryLookup {
  const TrajectoryArchive& archive;
  double bandwidth;
  std::size_t ensemble_size;
  std::size_t count;
  DriftArgs operator()(double x, bool& outside) const {
    outside = false;
    return exact_history_args(archive, x, bandwidth, ensemble_size, count);
  }
};

/// Test hook: fields identically zero.
struct ZeroFieldLookup {
  DriftArgs operator()(double, bool& outside) const {
    outside = false;
    return {};
  }
};

namespace detail {

template <class Body>
void for_each_particle(std::size_t n, std::size_t step, const char* what, Body&& body) {
  std::vector<std::uint8_t> failed(n, 0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(n); ++s) {
    const auto i = static_cast<std::size_t>(s);
    failed[i] = body(i) ? 0 : 1;
  }
  for (std::size_t i = 0; i < n; ++i)
    if (failed[i]) throw NumericalError(what, i, step);
}

}  // namespace detail

/// One Euler-Maruyama step Y <- Y + b(I, J) dt + sqrt(2 dt) xi for every alive
/// particle; xi comes from the particle's noise stream for `step`. Dead
/// particles are left untouched.
template <class Lookup>
void em_step(ParticleEnsemble& e, const Lookup& lookup, const PhysicalParams& p, double dt,
             std::uint64_t seed, std::size_t step, StepDiagnostics& diag) {
  const std::size_t n = e.size();
  std::vector<std::uint8_t> outside(n, 0), clamped(n, 0);
  const double noise_scale = std::sqrt(2.0 * dt);
  detail::for_each_particle(n, step, "non-finite position", [&](std::size_t i) {
    if (!e.alive[i]) return true;
    bool out = false, cl = false;
    const DriftArgs args = clamp_exposure(lookup(e.positions[i], out), cl);
    outside[i] = out;
    clamped[i] = cl;
    if (!std::isfinite(args.integral) || !std::isfinite(args.gradient)) return false;
    const double b = drift_b(args, p);
    auto stream = make_stream(seed, StreamKind::brownian_noise, e.stream_ids[i], step);
    const double xi = std::normal_distribution<double>(0.0, 1.0)(stream);
    e.positions[i] += b * dt + noise_scale * xi;
    return std::isfinite(e.positions[i]);
  });
  for (std::size_t i = 0; i < n; ++i) {
    diag.out_of_domain_lookups += outside[i];
    diag.clamped_exposures += clamped[i];
  }
}

/// Adds dt * reaction_rate(I(Y_i)) to each alive particle's hazard, refreshes
/// its discount and, in killed mode, retires it at `t_end` once the hazard
/// reaches its threshold.
template <class Lookup>
void update_hazards(ParticleEnsemble& e, const Lookup& lookup, const PhysicalParams& p, double dt,
                    double t_end, std::size_t step, StepDiagnostics& diag) {
  const std::size_t n = e.size();
  std::vector<std::uint8_t> outside(n, 0), clamped(n, 0);
  const bool killing = e.mode == Mode::killed;
  detail::for_each_particle(n, step, "non-finite hazard", [&](std::size_t i) {
    if (!e.alive[i]) return true;
    bool out = false, cl = false;
    const DriftArgs args = clamp_exposure(lookup(e.positions[i], out), cl);
    outside[i] = out;
    clamped[i] = cl;
    if (!std::isfinite(args.integral)) return false;
    e.hazards[i] += dt * reaction_rate(args.integral, p);
    e.weights[i] = std::exp(-e.hazards[i]);
    if (killing && e.hazards[i] >= e.thresholds[i]) {
      e.alive[i] = 0;
      e.death_times[i] = t_end;
    }
    return std::isfinite(e.hazards[i]);
  });
  for (std::size_t i = 0; i < n; ++i) {
    diag.out_of_domain_lookups += outside[i];
    diag.clamped_exposures += clamped[i];
  }
}

/// Point cloud feeding the density estimators: FK uses every particle with
/// its discount, killed mode uses survivors with weight 1.
inline WeightedPointCloud estimator_cloud(const ParticleEnsemble& e) {
  WeightedPointCloud c;
  if (e.mode == Mode::feynman_kac) {
    c.positions = e.positions;
    c.weights = e.weights;
    return c;
  }
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (!e.alive[i]) continue;
    c.positions.push_back(e.positions[i]);
    c.weights.push_back(1.0);
  }
  return c;
}

/// All N particles, dead ones with weight 0 (archive layout).
inline WeightedPointCloud full_snapshot(const ParticleEnsemble& e) {
  WeightedPointCloud c{e.positions, e.weights};
  if (e.mode == Mode::killed)
    for (std::size_t i = 0; i < e.size(); ++i) c.weights[i] = e.alive[i] ? 1.0 : 0.0;
  return c;
}

/// FK: mean weight. Killed: alive fraction.
inline double estimator_mass(const ParticleEnsemble& e) {
  double s = 0.0;
  if (e.mode == Mode::feynman_kac) {
    for (double w : e.weights) s += w;
  } else {
    for (auto a : e.alive) s += a ? 1.0 : 0.0;
  }
  return s / static_cast<double>(e.size());
}

/// (1/N) sum_i w_i (1 - w_i): conditional Bernoulli variance of survival.
inline double mean_weight_variance(const ParticleEnsemble& e) {
  double s = 0.0;
  for (double w : e.weights) s += w * (1.0 - w);
  return s / static_cast<double>(e.size());
}

/// Fraction of particles with hazard below their threshold, regardless of
/// mode. In FK mode this is the killed indicator evaluated on the FK paths.
inline double threshold_survival_fraction(const ParticleEnsemble& e) {
  double s = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) s += e.hazards[i] < e.thresholds[i] ? 1.0 : 0.0;
  return s / static_cast<double>(e.size());
}

struct RunOptions {
  std::size_t snapshot_stride = 1;
  bool keep_archive = false;
  /// Test hook: skip the field build and drive both drift and hazard with
  /// I = J = 0.
  bool zero_fields = false;
  /// Keep a copy of all hazards at each recorded time.
  bool record_hazards = false;
  /// Keep a copy of A and G every `field_stride` steps and at T (0: never).
  std::size_t field_stride = 0;
  std::vector<std::uint64_t> stream_ids;
};

struct SimulationOutput {
  SimConfig config;
  std::vector<std::size_t> recorded_steps;
  std::vector<double> times;
  std::vector<DensityField> densities;   // u_N at recorded times
  std::vector<double> grid_mass;         // trapezoid integral of u_N
  std::vector<double> estimator_mass;    // mean weight (FK) or alive fraction (killed)
  std::vector<double> escaped_mass;      // estimator mass carried by particles off the grid
  std::vector<double> weight_variance;   // (1/N) sum w (1 - w)
  std::vector<double> threshold_survival;
  std::vector<std::vector<double>> hazards;  // filled with RunOptions::record_hazards
  StepDiagnostics diagnostics;
  ParticleEnsemble final_state;
  AccumulatedFields fields;
  std::vector<AccumulatedFields> field_history;  // see RunOptions::field_stride
  std::optional<TrajectoryArchive> archive;
};

namespace detail {

inline double escaped(const ParticleEnsemble& e, const Grid1D& grid) {
  double s = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (!e.alive[i] || grid.contains(e.positions[i])) continue;
    s += e.mode == Mode::feynman_kac ? e.weights[i] : 1.0;
  }
  return s / static_cast<double>(e.size());
}

}  // namespace detail

/// Runs the interacting particle system of the configured mode on [0, T].
///
/// Step k: build the estimator cloud at t_k, accumulate it into the fields,
/// move every alive particle with the fields through t_k, then update
/// hazards at the new positions. Snapshots are taken every
/// `snapshot_stride` steps and always at T.
inline SimulationOutput run_simulation(const SimConfig& config, const RunOptions& options = {}) {
  validate_config(config);
  if (options.snapshot_stride == 0) throw ConfigError("snapshot stride must be >= 1");

  const std::size_t n_steps = step_count(config);
  const std::size_t n = config.particles;
  const double dt = config.step;
  const double delta = config.kernel.bandwidth;
  const GaussianKernel kernel(delta);
  const bool exact = config.field_mode == FieldMode::exact_history;

  SimulationOutput out;
  out.config = config;
  out.final_state = init_ensemble(config, options.stream_ids);
  out.fields = AccumulatedFields(config.grid, delta);
  ParticleEnsemble& e = out.final_state;

  TrajectoryArchive archive;
  archive.dt = dt;
  archive.ensemble_size = n;
  const bool archiving = options.keep_archive || exact;

  auto record = [&](std::size_t k, std::vector<double> density) {
    DensityField f{config.grid, std::move(density)};
    out.recorded_steps.push_back(k);
    out.times.push_back(static_cast<double>(k) * dt);
    out.grid_mass.push_back(trapezoid(f.grid, f.values));
    out.estimator_mass.push_back(estimator_mass(e));
    out.escaped_mass.push_back(detail::escaped(e, config.grid));
    out.weight_variance.push_back(mean_weight_variance(e));
    out.threshold_survival.push_back(threshold_survival_fraction(e));
    if (options.record_hazards) out.hazards.push_back(e.hazards);
    out.densities.push_back(std::move(f));
  };

  for (std::size_t k = 0;; ++k) {
    const bool recording = k % options.snapshot_stride == 0 || k == n_steps;
    const WeightedPointCloud cloud = estimator_cloud(e);
    if (archiving) archive.snapshots.push_back(full_snapshot(e));
    if (options.field_stride != 0 && (k % options.field_stride == 0 || k == n_steps))
      out.field_history.push_back(out.fields);

    if (k == n_steps) {
      if (recording) record(k, mollify_on_grid(config.grid, cloud, kernel, n).value);
      break;
    }

    if (options.zero_fields) {
      if (recording) record(k, mollify_on_grid(config.grid, cloud, kernel, n).value);
    } else {
      auto m = accumulate_step(out.fields, cloud, n, delta, dt);
      if (recording) record(k, std::move(m.value));
    }

    const double t_end = static_cast<double>(k + 1) * dt;
    if (options.zero_fields) {
      const ZeroFieldLookup lookup;
      em_step(e, lookup, config.physical, dt, config.seed, k, out.diagnostics);
      update_hazards(e, lookup, config.physical, dt, t_end, k, out.diagnostics);
    } else if (exact) {
      const ExactHistoryLookup lookup{archive, delta, n, k + 1};
      em_step(e, lookup, config.physical, dt, config.seed, k, out.diagnostics);
      update_hazards(e, lookup, config.physical, dt, t_end, k, out.diagnostics);
    } else {
      const GridFieldLookup lookup{out.fields};
      em_step(e, lookup, config.physical, dt, config.seed, k, out.diagnostics);
      update_hazards(e, lookup, config.physical, dt, t_end, k, out.diagnostics);
    }
  }

  if (archiving) out.archive = std::move(archive);
  return out;
}

}  // namespace mkfk
