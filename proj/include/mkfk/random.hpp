#pragma once

#include <cstdint>
#include <limits>

namespace mkfk {

/// Purpose tag mixed into every stream key so that the initial-position,
/// Brownian-noise and exponential-threshold draws of one particle never
/// share bits.
enum class StreamKind : std::uint64_t {
  initial_position = 0x1,
  brownian_noise = 0x2,
  killing_threshold = 0x3,
};

inline constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based uniform random bit generator.
///
/// Output n is splitmix64(key + n * golden), so a stream is fully determined
/// by its key and nothing about it depends on which thread draws from it or
/// in which order other streams are consumed. Satisfies
/// std::uniform_random_bit_generator and is meant to be fed to the standard
/// <random> distributions.
class CounterStream {
 public:
  using result_type = std::uint64_t;

  constexpr explicit CounterStream(std::uint64_t key) noexcept : key_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() noexcept {
    ++counter_;
    return splitmix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
  }

  constexpr std::uint64_t key() const noexcept { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Stream for (seed, purpose, particle stream id, time step).
inline constexpr CounterStream make_stream(std::uint64_t seed, StreamKind kind,
                                           std::uint64_t stream_id,
                                           std::uint64_t step = 0) noexcept {
  std::uint64_t key = splitmix64(seed);
  key = splitmix64(key ^ static_cast<std::uint64_t>(kind));
  key = splitmix64(key ^ stream_id);
  key = splitmix64(key ^ (step * 0xd1b54a32d192ed03ULL));
  return CounterStream(key);
}

}  // namespace mkfk
