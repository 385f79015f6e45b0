#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "mkfk/core.hpp"
#include "mkfk/parallel.hpp"

namespace mkfk {

/// Contributions farther than this many bandwidths from a query are skipped.
/// exp(-32) relative to the peak, i.e. below 1e-13; the skipped mass is
/// erfc(8 / sqrt 2) ~ 1.2e-15.
inline constexpr double kernel_cutoff_bandwidths = 8.0;

/// Gaussian kernel K(x) = exp(-x^2 / (2 delta^2)) / (delta sqrt(2 pi)) with
/// precomputed constants. Every density sum in the library goes through
/// value() and gradient() so that different bookkeeping paths (direct sums,
/// grid deposition, archived histories) produce identical bits.
class GaussianKernel {
 public:
  explicit GaussianKernel(double bandwidth)
      : bandwidth_(bandwidth),
        inv_two_var_(0.5 / (bandwidth * bandwidth)),
        inv_var_(1.0 / (bandwidth * bandwidth)),
        norm_(1.0 / (bandwidth * std::sqrt(2.0 * std::numbers::pi))),
        cutoff_(kernel_cutoff_bandwidths * bandwidth) {
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
      throw std::invalid_argument("kernel bandwidth must be positive and finite");
  }

  double value(double x) const noexcept { return norm_ * std::exp(-x * x * inv_two_var_); }
  double gradient(double x) const noexcept { return gradient_from_value(x, value(x)); }
  /// K'(x) given k = K(x); lets one exponential serve both sums.
  double gradient_from_value(double x, double k) const noexcept { return -x * inv_var_ * k; }

  double bandwidth() const noexcept { return bandwidth_; }
  double cutoff() const noexcept { return cutoff_; }

 private:
  double bandwidth_;
  double inv_two_var_;
  double inv_var_;
  double norm_;
  double cutoff_;
};

inline double kernel_value(double x, double bandwidth) { return GaussianKernel(bandwidth).value(x); }
inline double kernel_grad(double x, double bandwidth) { return GaussianKernel(bandwidth).gradient(x); }

/// Weighted Dirac masses: FK discounts, or alive indicators of surviving
/// particles.
struct WeightedPointCloud {
  std::vector<double> positions;
  std::vector<double> weights;

  std::size_t size() const noexcept { return positions.size(); }
};

inline void check_cloud(const WeightedPointCloud& cloud) {
  if (cloud.positions.size() != cloud.weights.size())
    throw std::invalid_argument("point cloud positions and weights differ in length");
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!std::isfinite(cloud.positions[i]))
      throw std::invalid_argument("point cloud position " + std::to_string(i) + " is not finite");
    const double w = cloud.weights[i];
    if (!(w >= 0.0 && w <= 1.0))
      throw std::invalid_argument("point cloud weight " + std::to_string(i) + " outside [0, 1]");
  }
}

namespace detail {

inline double divisor_of(std::size_t ensemble_size) {
  if (ensemble_size == 0) throw std::invalid_argument("ensemble size N must be positive");
  return static_cast<double>(ensemble_size);
}

}  // namespace detail

/// (1/N) sum_i w_i K(query - y_i), summed in index order.
inline double mollify(const WeightedPointCloud& cloud, const GaussianKernel& kernel, double query,
                      std::size_t ensemble_size) {
  const double divisor = detail::divisor_of(ensemble_size);
  const double cutoff = kernel.cutoff();
  double sum = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const double d = query - cloud.positions[i];
    if (std::abs(d) > cutoff) continue;
    sum += cloud.weights[i] * kernel.value(d);
  }
  return sum / divisor;
}

inline double mollify(const WeightedPointCloud& cloud, double bandwidth, double query,
                      std::size_t ensemble_size) {
  return mollify(cloud, GaussianKernel(bandwidth), query, ensemble_size);
}

/// (1/N) sum_i w_i K'(query - y_i), summed in index order.
inline double mollify_grad(const WeightedPointCloud& cloud, const GaussianKernel& kernel, double query,
                           std::size_t ensemble_size) {
  const double divisor = detail::divisor_of(ensemble_size);
  const double cutoff = kernel.cutoff();
  double sum = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const double d = query - cloud.positions[i];
    if (std::abs(d) > cutoff) continue;
    sum += cloud.weights[i] * kernel.gradient(d);
  }
  return sum / divisor;
}

inline double mollify_grad(const WeightedPointCloud& cloud, double bandwidth, double query,
                           std::size_t ensemble_size) {
  return mollify_grad(cloud, GaussianKernel(bandwidth), query, ensemble_size);
}

/// mollify and mollify_grad at every grid node.
struct GridMollification {
  std::vector<double> value;
  std::vector<double> gradient;
};

/// Evaluates mollify / mollify_grad at all nodes in O(n * window) instead of
/// O(n * M). Each worker owns a contiguous block of nodes and visits the
/// particles in index order, so every node sees exactly the summation of
/// mollify() and the result is bit-identical to calling it per node, for any
/// worker count.
inline GridMollification mollify_on_grid(const Grid1D& grid, const WeightedPointCloud& cloud,
                                         const GaussianKernel& kernel, std::size_t ensemble_size) {
  const double divisor = detail::divisor_of(ensemble_size);
  const std::size_t m = grid.count;
  GridMollification out{std::vector<double>(m, 0.0), std::vector<double>(m, 0.0)};
  const double cutoff = kernel.cutoff();
  const double h = grid.spacing;
  const double last = static_cast<double>(m - 1);

#pragma omp parallel
  {
    const Slice mine = block_slice(m, omp_get_thread_num(), omp_get_num_threads());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const double y = cloud.positions[i];
      if (!std::isfinite(y)) continue;
      // One node of slack on each side; the exact test below decides.
      const double lo_f = std::floor((y - cutoff - grid.lower) / h) - 1.0;
      const double hi_f = std::ceil((y + cutoff - grid.lower) / h) + 1.0;
      if (hi_f < 0.0 || lo_f > last) continue;
      const std::size_t lo = static_cast<std::size_t>(std::max(lo_f, 0.0));
      const std::size_t hi = static_cast<std::size_t>(std::min(hi_f, last));
      const std::size_t begin = std::max(lo, mine.begin);
      const std::size_t end = std::min(hi + 1, mine.end);
      const double w = cloud.weights[i];
      for (std::size_t g = begin; g < end; ++g) {
        const double d = grid.node(g) - y;
        if (std::abs(d) > cutoff) continue;
        const double k = kernel.value(d);
        out.value[g] += w * k;
        out.gradient[g] += w * kernel.gradient_from_value(d, k);
      }
    }
    for (std::size_t g = mine.begin; g < mine.end; ++g) {
      out.value[g] /= divisor;
      out.gradient[g] /= divisor;
    }
  }
  return out;
}

}  // namespace mkfk
