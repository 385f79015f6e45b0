#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mkfk/core.hpp"
#include "mkfk/initial_density.hpp"

namespace mkfk {

/// Everything a particle run or a reference solve needs.
struct SimConfig {
  PhysicalParams physical;
  KernelSpec kernel;
  Grid1D grid = make_symmetric_grid(8.0, 0.05);
  double horizon = 1.0;   // T
  double step = 1e-3;     // dt
  std::size_t particles = 1000;
  Mode mode = Mode::feynman_kac;
  std::uint64_t seed = 0;
  FieldMode field_mode = FieldMode::grid_accumulator;
  InitialDensitySpec initial;
};

/// Number of time steps T / dt (exact when the config is valid).
inline std::size_t step_count(const SimConfig& c) {
  return static_cast<std::size_t>(std::llround(c.horizon / c.step));
}

/// Half-width 6 sqrt(2T) + (initial support radius) + 8 delta, rounded up to
/// a multiple of the spacing.
inline double default_half_width(double horizon, const InitialDensitySpec& initial,
                                 double bandwidth, double spacing) {
  const double raw = 6.0 * std::sqrt(2.0 * horizon) + initial_support_radius(initial) + 8.0 * bandwidth;
  return std::ceil(raw / spacing - 1e-9) * spacing;
}

/// Every invariant violation of the configuration. Empty means valid.
inline std::vector<std::string> config_violations(const SimConfig& c) {
  std::vector<std::string> out;
  const auto& p = c.physical;

  if (!(p.lambda >= 0.0) || !std::isfinite(p.lambda)) out.push_back("lambda must be >= 0");
  if (!(p.c0 > 0.0) || !std::isfinite(p.c0)) out.push_back("c0 must be > 0");
  if (!(p.phi_bar > 0.0)) out.push_back("phi_bar must be > 0");
  if (!(p.phi0 > 0.0 && p.phi0 < p.phi_bar))
    out.push_back("porosity positivity: phi0 must lie in (0, phi_bar)");
  const double phi_c0 = p.phi0 + p.phi1 * p.c0;
  if (!(phi_c0 > 0.0 && phi_c0 < p.phi_bar))
    out.push_back("porosity positivity: phi0 + phi1*c0 = " + std::to_string(phi_c0) +
                  " must lie in (0, phi_bar)");
  if (!std::isfinite(p.phi1)) out.push_back("phi1 must be finite");
  if (!(p.s0 > 0.0 && p.s0 <= 1.0)) out.push_back("s0 must lie in (0, 1]");

  if (!(c.kernel.bandwidth > 0.0) || !std::isfinite(c.kernel.bandwidth))
    out.push_back("kernel bandwidth delta must be > 0");

  const auto& g = c.grid;
  if (!(g.spacing > 0.0) || !std::isfinite(g.spacing)) out.push_back("grid spacing must be > 0");
  if (g.count < 3) out.push_back("grid needs at least 3 nodes");

  if (!(c.horizon > 0.0) || !std::isfinite(c.horizon)) out.push_back("horizon T must be > 0");
  if (!(c.step > 0.0) || !std::isfinite(c.step)) {
    out.push_back("time step dt must be > 0");
  } else if (c.horizon > 0.0) {
    const double n = std::round(c.horizon / c.step);
    if (n < 1.0 || std::abs(n * c.step - c.horizon) > 1e-12 * c.horizon)
      out.push_back("dt must divide T");
    if (g.spacing > 0.0 && c.step > 0.5 * g.spacing * g.spacing)
      out.push_back("CFL violation: dt = " + std::to_string(c.step) + " exceeds h^2/2 = " +
                    std::to_string(0.5 * g.spacing * g.spacing));
  }

  if (c.particles < 1) out.push_back("particle count N must be >= 1");

  for (auto& v : initial_density_violations(c.initial, p.s0)) out.push_back(std::move(v));
  return out;
}

/// Returns the config unchanged when valid; throws ConfigError listing every
/// violation otherwise.
inline const SimConfig& validate_config(const SimConfig& c) {
  auto v = config_violations(c);
  if (!v.empty()) throw ConfigError(std::move(v));
  return c;
}

}  // namespace mkfk
