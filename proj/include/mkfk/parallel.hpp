#pragma once

#include <algorithm>
#include <cstddef>

#include <omp.h>

namespace mkfk {

/// Sets the number of OpenMP workers used by every parallel loop in the
/// library. Results never depend on this value: parallel loops only ever
/// write disjoint outputs, and every floating-point reduction runs in a fixed
/// index order on one worker.
inline void set_worker_count(int workers) { omp_set_num_threads(std::max(1, workers)); }

inline int worker_count() { return omp_get_max_threads(); }

/// Half-open slice [begin, end) of `total` items owned by worker `rank` of `size`.
struct Slice {
  std::size_t begin;
  std::size_t end;
};

inline Slice block_slice(std::size_t total, int rank, int size) {
  const auto r = static_cast<std::size_t>(rank);
  const auto s = static_cast<std::size_t>(size);
  return {total * r / s, total * (r + 1) / s};
}

}  // namespace mkfk
