#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <span>
#include <utility>
#include <vector>

namespace mkfk {

/// Thrown when a configuration or an argument violates a documented
/// invariant. Carries every violation found, not only the first.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(std::vector<std::string> violations)
      : std::invalid_argument(join(violations)), violations_(std::move(violations)) {}
  explicit ConfigError(const std::string& violation)
      : ConfigError(std::vector<std::string>{violation}) {}

  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) {
      if (!out.empty()) out += "; ";
      out += s;
    }
    return out;
  }
  std::vector<std::string> violations_;
};

/// A state value became NaN or infinite during time stepping.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::size_t index, std::size_t step)
      : std::runtime_error(what + " (index " + std::to_string(index) + ", step " +
                           std::to_string(step) + ")"),
        index_(index),
        step_(step) {}

  std::size_t index() const noexcept { return index_; }
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t index_;
  std::size_t step_;
};

/// Two objects that must share a spatial grid (or lattice) do not.
class GridMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Reaction and porosity constants of the sulphation model.
struct PhysicalParams {
  double lambda = 1.0;  // reaction rate
  double c0 = 1.0;      // initial calcite density
  double phi0 = 0.3;    // porosity offset
  double phi1 = 0.7;    // porosity slope
  double phi_bar = 2.0; // porosity upper bound
  double s0 = 1.0;      // sup bound of the initial density
};

/// Porosity phi(c) = phi0 + phi1 * c.
inline double porosity(double calcite, const PhysicalParams& p) noexcept {
  return p.phi0 + p.phi1 * calcite;
}

/// Gaussian smoothing kernel; only the bandwidth is configurable.
struct KernelSpec {
  double bandwidth = 0.3;
};

/// Uniform 1-D grid with nodes lower + g * spacing, g = 0 .. count-1.
struct Grid1D {
  double lower = -1.0;
  double spacing = 1.0;
  std::size_t count = 3;

  double upper() const noexcept { return lower + static_cast<double>(count - 1) * spacing; }
  double node(std::size_t g) const noexcept { return lower + static_cast<double>(g) * spacing; }

  std::vector<double> nodes() const {
    std::vector<double> x(count);
    for (std::size_t g = 0; g < count; ++g) x[g] = node(g);
    return x;
  }

  bool contains(double x) const noexcept { return x >= lower && x <= upper(); }

  friend bool operator==(const Grid1D&, const Grid1D&) = default;
};

/// Builds the grid [lower, upper] with the given spacing. The interval length
/// must be an integer multiple of the spacing (relative tolerance 1e-9).
inline Grid1D make_grid(double lower, double upper, double spacing) {
  std::vector<std::string> errors;
  if (!(spacing > 0.0) || !std::isfinite(spacing)) errors.push_back("grid spacing must be positive");
  if (!(upper > lower) || !std::isfinite(lower) || !std::isfinite(upper))
    errors.push_back("grid requires lower < upper");
  if (!errors.empty()) throw ConfigError(errors);
  const double cells = (upper - lower) / spacing;
  const double rounded = std::round(cells);
  if (std::abs(cells - rounded) > 1e-9 * std::max(1.0, cells))
    throw ConfigError("grid length is not an integer multiple of the spacing");
  if (rounded < 2.0) throw ConfigError("grid needs at least 3 nodes");
  return Grid1D{lower, spacing, static_cast<std::size_t>(rounded) + 1};
}

/// Symmetric grid [-half_width, half_width].
inline Grid1D make_symmetric_grid(double half_width, double spacing) {
  return make_grid(-half_width, half_width, spacing);
}

/// Composite trapezoid rule over the grid.
inline double trapezoid(const Grid1D& grid, std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  double s = 0.5 * (v.front() + v.back());
  for (std::size_t g = 1; g + 1 < v.size(); ++g) s += v[g];
  return s * grid.spacing;
}

/// A function sampled on a grid: u_N, the reference v, or K * v.
struct DensityField {
  Grid1D grid;
  std::vector<double> values;
};

enum class Mode { feynman_kac, killed };
enum class FieldMode { grid_accumulator, exact_history };

inline const char* to_string(Mode m) noexcept {
  return m == Mode::feynman_kac ? "fk" : "kill";
}
inline const char* to_string(FieldMode m) noexcept {
  return m == FieldMode::grid_accumulator ? "grid-accumulator" : "exact-history";
}

inline Mode parse_mode(const std::string& s) {
  if (s == "fk" || s == "feynman-kac") return Mode::feynman_kac;
  if (s == "kill" || s == "killed") return Mode::killed;
  throw ConfigError("unknown mode '" + s + "' (expected fk or kill)");
}

inline FieldMode parse_field_mode(const std::string& s) {
  if (s == "grid-accumulator" || s == "grid") return FieldMode::grid_accumulator;
  if (s == "exact-history" || s == "exact") return FieldMode::exact_history;
  throw ConfigError("unknown field mode '" + s + "'");
}

}  // namespace mkfk
