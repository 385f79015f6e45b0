#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "mkfk/core.hpp"
#include "mkfk/random.hpp"

namespace mkfk {

enum class InitialFamily { gaussian_bump, truncated_cosine_bump, tabulated };

inline const char* to_string(InitialFamily f) noexcept {
  switch (f) {
    case InitialFamily::gaussian_bump: return "gaussian-bump";
    case InitialFamily::truncated_cosine_bump: return "truncated-cosine-bump";
    case InitialFamily::tabulated: return "tabulated";
  }
  return "?";
}

inline InitialFamily parse_initial_family(const std::string& s) {
  if (s == "gaussian-bump" || s == "gaussian") return InitialFamily::gaussian_bump;
  if (s == "truncated-cosine-bump" || s == "cosine") return InitialFamily::truncated_cosine_bump;
  if (s == "tabulated") return InitialFamily::tabulated;
  throw ConfigError("unknown initial density family '" + s + "'");
}

/// Initial density rho0.
///
/// gaussian-bump: N(center, width^2).
/// truncated-cosine-bump: (1 + cos(pi (x - center) / width)) / (2 width) on
///   [center - width, center + width], zero elsewhere.
/// tabulated: piecewise-linear through (table_x, table_density), zero outside.
///   With `normalize` set the table is rescaled to unit mass; otherwise it
///   must already integrate to 1.
struct InitialDensitySpec {
  InitialFamily family = InitialFamily::gaussian_bump;
  double center = 0.0;
  double width = 1.0;
  std::vector<double> table_x;
  std::vector<double> table_density;
  bool normalize = false;
  std::string table_path;  // provenance only
};

namespace detail {

inline double table_mass(const InitialDensitySpec& s) {
  double m = 0.0;
  for (std::size_t i = 1; i < s.table_x.size(); ++i)
    m += 0.5 * (s.table_density[i] + s.table_density[i - 1]) * (s.table_x[i] - s.table_x[i - 1]);
  return m;
}

inline double table_scale(const InitialDensitySpec& s) {
  if (!s.normalize) return 1.0;
  const double m = table_mass(s);
  return m > 0.0 ? 1.0 / m : 1.0;
}

}  // namespace detail

inline double max_initial_density(const InitialDensitySpec& s) {
  switch (s.family) {
    case InitialFamily::gaussian_bump:
      return 1.0 / (s.width * std::sqrt(2.0 * std::numbers::pi));
    case InitialFamily::truncated_cosine_bump:
      return 1.0 / s.width;
    case InitialFamily::tabulated:
      return detail::table_scale(s) *
             *std::max_element(s.table_density.begin(), s.table_density.end());
  }
  return 0.0;
}

/// Problems with the initial density, relative to the sup bound s0.
inline std::vector<std::string> initial_density_violations(const InitialDensitySpec& s, double s0) {
  std::vector<std::string> out;
  switch (s.family) {
    case InitialFamily::gaussian_bump:
    case InitialFamily::truncated_cosine_bump: {
      if (!std::isfinite(s.center)) out.push_back("initial center must be finite");
      if (!(s.width > 0.0) || !std::isfinite(s.width)) {
        out.push_back("initial width must be positive");
        return out;
      }
      break;
    }
    case InitialFamily::tabulated: {
      if (s.table_x.size() < 2 || s.table_x.size() != s.table_density.size()) {
        out.push_back("tabulated initial density needs >= 2 (x, density) rows");
        return out;
      }
      for (std::size_t i = 0; i < s.table_x.size(); ++i) {
        if (!std::isfinite(s.table_x[i]) || !std::isfinite(s.table_density[i])) {
          out.push_back("tabulated initial density has non-finite values");
          return out;
        }
        if (s.table_density[i] < 0.0) {
          out.push_back("tabulated initial density has negative values");
          return out;
        }
        if (i > 0 && !(s.table_x[i] > s.table_x[i - 1])) {
          out.push_back("tabulated initial density x must be strictly increasing");
          return out;
        }
      }
      const double mass = detail::table_mass(s);
      if (!(mass > 0.0)) {
        out.push_back("tabulated initial density has zero mass");
        return out;
      }
      if (!s.normalize && std::abs(mass - 1.0) > 1e-6)
        out.push_back("initial density is not normalized (mass " + std::to_string(mass) + ")");
      break;
    }
  }
  const double peak = max_initial_density(s);
  if (!(peak < s0))
    out.push_back("initial density maximum " + std::to_string(peak) + " is not below s0 = " +
                  std::to_string(s0));
  return out;
}

/// rho0(x).
inline double initial_density(const InitialDensitySpec& s, double x) {
  switch (s.family) {
    case InitialFamily::gaussian_bump: {
      const double z = (x - s.center) / s.width;
      return std::exp(-0.5 * z * z) / (s.width * std::sqrt(2.0 * std::numbers::pi));
    }
    case InitialFamily::truncated_cosine_bump: {
      const double d = x - s.center;
      if (std::abs(d) > s.width) return 0.0;
      return (1.0 + std::cos(std::numbers::pi * d / s.width)) / (2.0 * s.width);
    }
    case InitialFamily::tabulated: {
      const auto& xs = s.table_x;
      if (x < xs.front() || x > xs.back()) return 0.0;
      const auto it = std::upper_bound(xs.begin(), xs.end(), x);
      const std::size_t j = std::min<std::size_t>(static_cast<std::size_t>(it - xs.begin()), xs.size() - 1);
      const std::size_t i = j - 1;
      const double f = (x - xs[i]) / (xs[j] - xs[i]);
      return detail::table_scale(s) * ((1.0 - f) * s.table_density[i] + f * s.table_density[j]);
    }
  }
  return 0.0;
}

/// Radius around the center outside of which rho0 is negligible (< 1e-7
/// relative) or exactly zero.
inline double initial_support_radius(const InitialDensitySpec& s) {
  switch (s.family) {
    case InitialFamily::gaussian_bump: return std::abs(s.center) + 6.0 * s.width;
    case InitialFamily::truncated_cosine_bump: return std::abs(s.center) + s.width;
    case InitialFamily::tabulated:
      return std::max(std::abs(s.table_x.front()), std::abs(s.table_x.back()));
  }
  return 0.0;
}

/// Draws positions with law rho0(x) dx. Deterministic in the stream state.
class InitialSampler {
 public:
  explicit InitialSampler(InitialDensitySpec spec) : spec_(std::move(spec)) {
    if (spec_.family == InitialFamily::tabulated) {
      const auto v = initial_density_violations(spec_, std::numeric_limits<double>::infinity());
      if (!v.empty()) throw ConfigError(v);
      table_ = std::piecewise_linear_distribution<double>(
          spec_.table_x.begin(), spec_.table_x.end(), spec_.table_density.begin());
    }
  }

  double operator()(CounterStream& stream) {
    switch (spec_.family) {
      case InitialFamily::gaussian_bump: {
        std::normal_distribution<double> normal(spec_.center, spec_.width);
        return normal(stream);
      }
      case InitialFamily::truncated_cosine_bump: {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (;;) {
          const double d = spec_.width * (2.0 * unit(stream) - 1.0);
          const double accept = 0.5 * (1.0 + std::cos(std::numbers::pi * d / spec_.width));
          if (unit(stream) <= accept) return spec_.center + d;
        }
      }
      case InitialFamily::tabulated:
        table_.reset();
        return table_(stream);
    }
    return spec_.center;
  }

  const InitialDensitySpec& spec() const noexcept { return spec_; }

 private:
  InitialDensitySpec spec_;
  std::piecewise_linear_distribution<double> table_;
};

/// Draw one position from rho0.
inline double sample_initial_position(const InitialDensitySpec& spec, CounterStream& stream) {
  InitialSampler sampler(spec);
  return sampler(stream);
}

}  // namespace mkfk
