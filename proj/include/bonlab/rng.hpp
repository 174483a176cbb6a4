#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>
#include <vector>

namespace bonlab {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers:
/// as easy as 1, 2, 3", SC 2011). Maps a 128-bit counter and 64-bit key to
/// 128 random bits.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key) noexcept;

/// SplitMix64 finalizer, used to derive stream identifiers.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Counter-based random stream. The Philox key is the 64-bit seed; the high
/// half of the counter is a 64-bit stream id and the low half is the block
/// position within that stream. `split` derives child streams from a path of
/// integers, so (seed, path) names a stream independent of the order in
/// which streams are consumed. All distribution code is implemented here
/// rather than through <random> so output is identical across standard
/// libraries.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed, std::uint64_t stream_id = 0) noexcept
      : seed_(seed), stream_id_(stream_id) {}

  RandomStream split(std::initializer_list<std::uint64_t> path) const noexcept;
  RandomStream split(std::uint64_t id) const noexcept { return split({id}); }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  std::uint64_t next_u64() noexcept;
  result_type operator()() noexcept { return next_u64(); }
  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform() noexcept;
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Unbiased integer in [0, n); n must be > 0.
  std::size_t uniform_index(std::size_t n) noexcept;
  /// Standard normal via the Marsaglia polar method.
  double normal() noexcept;
  double normal(double mean, double sd) noexcept { return mean + sd * normal(); }

  /// Fisher-Yates shuffle of `v` driven by this stream.
  template <class T>
  void shuffle(std::vector<T>& v) noexcept {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = uniform_index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  unsigned buffered_ = 0;  // 32-bit words left in buffer_
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace bonlab
