#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "mkfk/config.hpp"
#include "mkfk/core.hpp"
#include "mkfk/dynamics.hpp"
#include "mkfk/kernel.hpp"

namespace mkfk {

/// Reference solution of
///   v_t = v_xx - (b(A, G) v)_x - lambda c0 exp(-lambda A) v,
///   A = int_0^t K * v dr,  G = int_0^t (K * v)_x dr,
/// on a truncated grid with v = 0 at both ends.
struct PdeState {
  Grid1D grid;
  std::vector<double> v;
  std::vector<double> A;
  std::vector<double> G;
  double dt = 0.0;
  std::size_t steps = 0;
  std::size_t clamped_nodes = 0;
  double clamped_mass = 0.0;

  double time() const noexcept { return static_cast<double>(steps) * dt; }
};

/// Trapezoid weights times kernel values at node offsets: entry j + radius
/// holds h K(j h) (resp. h K'(j h)) for |j h| <= 8 delta.
struct ConvolutionStencil {
  std::size_t radius = 0;
  std::vector<double> value;
  std::vector<double> gradient;
};

inline ConvolutionStencil make_stencil(const Grid1D& grid, double bandwidth) {
  const GaussianKernel kernel(bandwidth);
  ConvolutionStencil s;
  s.radius = static_cast<std::size_t>(std::floor(kernel.cutoff() / grid.spacing));
  s.value.resize(2 * s.radius + 1);
  s.gradient.resize(2 * s.radius + 1);
  for (std::size_t j = 0; j < s.value.size(); ++j) {
    const double x = (static_cast<double>(j) - static_cast<double>(s.radius)) * grid.spacing;
    s.value[j] = grid.spacing * kernel.value(x);
    s.gradient[j] = grid.spacing * kernel.gradient(x);
  }
  return s;
}

/// K * v and (K * v)_x at every node by trapezoid quadrature of the
/// convolution integral.
inline GridMollification convolve(const Grid1D& grid, const std::vector<double>& v,
                                  const ConvolutionStencil& s) {
  const std::size_t m = grid.count;
  GridMollification out{std::vector<double>(m, 0.0), std::vector<double>(m, 0.0)};
  const auto r = static_cast<std::ptrdiff_t>(s.radius);
  const auto last = static_cast<std::ptrdiff_t>(m) - 1;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t g = 0; g <= last; ++g) {
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, g - r);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(last, g + r);
    double val = 0.0, grad = 0.0;
    for (std::ptrdiff_t j = lo; j <= hi; ++j) {
      const double tw = (j == 0 || j == last) ? 0.5 * v[j] : v[j];
      const std::size_t idx = static_cast<std::size_t>(g - j + r);
      val += s.value[idx] * tw;
      grad += s.gradient[idx] * tw;
    }
    out.value[g] = val;
    out.gradient[g] = grad;
  }
  return out;
}

/// v sampled from rho0, zero at the two boundary nodes.
inline PdeState init_pde_state(const Grid1D& grid, const InitialDensitySpec& initial) {
  PdeState s;
  s.grid = grid;
  s.v.resize(grid.count);
  for (std::size_t g = 0; g < grid.count; ++g) s.v[g] = initial_density(initial, grid.node(g));
  s.v.front() = 0.0;
  s.v.back() = 0.0;
  s.A.assign(grid.count, 0.0);
  s.G.assign(grid.count, 0.0);
  return s;
}

/// Per-step mass bookkeeping: residual = after - before + sink + outflow - clamped
/// vanishes up to rounding for the conservative flux form used here.
struct PdeStepReport {
  double mass_before = 0.0;
  double mass_after = 0.0;
  double reaction_sink = 0.0;
  double boundary_outflow = 0.0;
  double clamped_mass = 0.0;
  double residual = 0.0;
};

/// One explicit step:
///  1. K * v and (K * v)_x by quadrature,
///  2. A += dt K * v, G += dt (K * v)_x,
///  3. interface fluxes F_{g+1/2} upwinded on the sign of the averaged drift,
///  4. v += dt (v_xx - (F_{g+1/2} - F_{g-1/2}) / h - rate(A) v), negatives clamped.
inline PdeStepReport pde_step(PdeState& s, const PhysicalParams& p, const ConvolutionStencil& stencil,
                              double dt) {
  const Grid1D& grid = s.grid;
  const double h = grid.spacing;
  if (!(dt > 0.0) || dt > 0.5 * h * h)
    throw ConfigError("CFL violation: dt must lie in (0, h^2/2]");
  if (s.steps > 0 && dt != s.dt) throw std::invalid_argument("pde_step: dt changed between steps");
  const std::size_t m = grid.count;

  PdeStepReport rep;
  rep.mass_before = trapezoid(grid, s.v);

  const auto conv = convolve(grid, s.v, stencil);
  std::vector<double> velocity(m), rate(m);
  for (std::size_t g = 0; g < m; ++g) {
    s.A[g] += dt * conv.value[g];
    s.G[g] += dt * conv.gradient[g];
    const double exposure = std::max(s.A[g], 0.0);
    velocity[g] = drift_b({exposure, s.G[g]}, p);
    rate[g] = reaction_rate(exposure, p);
  }

  // flux[g] is F_{g+1/2}
  std::vector<double> flux(m - 1);
  for (std::size_t g = 0; g + 1 < m; ++g) {
    const double vel = 0.5 * (velocity[g] + velocity[g + 1]);
    flux[g] = vel >= 0.0 ? vel * s.v[g] : vel * s.v[g + 1];
  }

  std::vector<double> next(m, 0.0);
  const double inv_h2 = 1.0 / (h * h);
  double sink = 0.0;
  for (std::size_t g = 1; g + 1 < m; ++g) {
    const double lap = (s.v[g + 1] - 2.0 * s.v[g] + s.v[g - 1]) * inv_h2;
    const double div = (flux[g] - flux[g - 1]) / h;
    const double reaction = rate[g] * s.v[g];
    sink += reaction;
    next[g] = s.v[g] + dt * (lap - div - reaction);
    if (!std::isfinite(next[g])) throw NumericalError("non-finite PDE value", g, s.steps);
  }
  rep.reaction_sink = dt * h * sink;
  rep.boundary_outflow =
      dt * ((s.v[1] - s.v[0]) / h + (s.v[m - 2] - s.v[m - 1]) / h + flux[m - 2] - flux[0]);

  double clamped = 0.0;
  for (std::size_t g = 1; g + 1 < m; ++g) {
    if (next[g] < 0.0) {
      clamped -= next[g];
      next[g] = 0.0;
      ++s.clamped_nodes;
    }
  }
  rep.clamped_mass = clamped * h;
  s.clamped_mass += rep.clamped_mass;

  s.v = std::move(next);
  s.dt = dt;
  ++s.steps;
  rep.mass_after = trapezoid(grid, s.v);
  rep.residual = rep.mass_after - rep.mass_before + rep.reaction_sink + rep.boundary_outflow - rep.clamped_mass;
  return rep;
}

struct PdeOutput {
  SimConfig config;
  std::vector<std::size_t> recorded_steps;
  std::vector<double> times;
  std::vector<DensityField> densities;  // v
  std::vector<DensityField> mollified;  // K * v
  std::vector<DensityField> calcite;    // c0 exp(-lambda A)
  std::vector<double> mass;
  std::vector<PdeStepReport> reports;   // one per step
  PdeState final_state;
};

/// Iterates pde_step over [0, T], recording every `stride` steps and at T.
inline PdeOutput solve_pde(const SimConfig& config, std::size_t stride = 1) {
  validate_config(config);
  if (stride == 0) throw ConfigError("snapshot stride must be >= 1");
  const std::size_t n_steps = step_count(config);
  const auto stencil = make_stencil(config.grid, config.kernel.bandwidth);

  PdeOutput out;
  out.config = config;
  out.final_state = init_pde_state(config.grid, config.initial);
  PdeState& s = out.final_state;
  out.reports.reserve(n_steps);

  for (std::size_t k = 0;; ++k) {
    if (k % stride == 0 || k == n_steps) {
      out.recorded_steps.push_back(k);
      out.times.push_back(static_cast<double>(k) * config.step);
      out.densities.push_back({config.grid, s.v});
      out.mollified.push_back({config.grid, convolve(config.grid, s.v, stencil).value});
      std::vector<double> c(config.grid.count);
      for (std::size_t g = 0; g < c.size(); ++g) c[g] = recover_calcite(std::max(s.A[g], 0.0), config.physical);
      out.calcite.push_back({config.grid, std::move(c)});
      out.mass.push_back(trapezoid(config.grid, s.v));
    }
    if (k == n_steps) break;
    out.reports.push_back(pde_step(s, config.physical, stencil, config.step));
  }
  return out;
}

/// K * v for an arbitrary nodal field.
inline DensityField mollify_field(const DensityField& f, double bandwidth) {
  return {f.grid, convolve(f.grid, f.values, make_stencil(f.grid, bandwidth)).value};
}

}  // namespace mkfk
