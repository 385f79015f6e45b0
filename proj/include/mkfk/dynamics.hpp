#pragma once

#include <cmath>
#include <stdexcept>

#include "mkfk/core.hpp"

namespace mkfk {

/// The two path-dependent arguments of the drift at one point x:
/// integral = int_0^t (K * nu_r)(x) dr, gradient = int_0^t (K' * nu_r)(x) dr.
struct DriftArgs {
  double integral = 0.0;
  double gradient = 0.0;
};

/// c = c0 exp(-lambda I): calcite left after exposure I.
inline double recover_calcite(double exposure, const PhysicalParams& p) {
  if (!(exposure >= 0.0) || !std::isfinite(exposure))
    throw std::invalid_argument("calcite recovery needs a finite exposure >= 0");
  return p.c0 * std::exp(-p.lambda * exposure);
}

/// lambda c0 exp(-lambda I); the reaction coefficient of the PDE and the
/// killing intensity of a particle. Computed as lambda * recover_calcite(I)
/// so that the two agree to the last bit.
inline double reaction_rate(double exposure, const PhysicalParams& p) {
  if (!(exposure >= 0.0) || !std::isfinite(exposure))
    throw std::invalid_argument("reaction rate needs a finite exposure >= 0");
  return p.lambda * recover_calcite(exposure, p);
}

/// Velocity b(I, J) = -phi1 lambda c0 e^{-lambda I} J / (phi0 + phi1 c0 e^{-lambda I}),
/// i.e. grad(phi(c)) / phi(c) with c = c0 e^{-lambda I} and grad c = -lambda c J.
inline double drift_b(const DriftArgs& args, const PhysicalParams& p) {
  if (!std::isfinite(args.integral) || !std::isfinite(args.gradient))
    throw std::invalid_argument("drift arguments must be finite");
  const double c = p.c0 * std::exp(-p.lambda * args.integral);
  return -p.phi1 * p.lambda * c * args.gradient / (p.phi0 + p.phi1 * c);
}

/// Lipschitz constant of drift_b in J: |phi1| lambda c0 / min(phi0, phi0 + phi1 c0).
inline double drift_lipschitz_bound(const PhysicalParams& p) {
  return std::abs(p.phi1) * p.lambda * p.c0 / std::min(p.phi0, p.phi0 + p.phi1 * p.c0);
}

/// Negative exposures can only come from interpolation undershoot; they are
/// reset to zero and reported through `clamped`.
inline DriftArgs clamp_exposure(DriftArgs args, bool& clamped) noexcept {
  clamped = args.integral < 0.0;
  if (clamped) args.integral = 0.0;
  return args;
}

}  // namespace mkfk
