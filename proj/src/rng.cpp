#include "bonlab/rng.hpp"

#include <cmath>

namespace bonlab {
namespace {

__extension__ using u128 = unsigned __int128;

constexpr std::uint32_t kMulA = 0xD2511F53u;
constexpr std::uint32_t kMulB = 0xCD9E8D57u;
constexpr std::uint32_t kWeylA = 0x9E3779B9u;
constexpr std::uint32_t kWeylB = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  lo = static_cast<std::uint32_t>(p);
  hi = static_cast<std::uint32_t>(p >> 32);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) noexcept {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeylA;
      key[1] += kWeylB;
    }
    std::uint32_t lo0, hi0, lo1, hi1;
    mulhilo(kMulA, ctr[0], lo0, hi0);
    mulhilo(kMulB, ctr[2], lo1, hi1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

RandomStream RandomStream::split(std::initializer_list<std::uint64_t> path) const noexcept {
  std::uint64_t id = stream_id_;
  for (std::uint64_t p : path) id = mix64(id ^ mix64(p));
  return RandomStream(seed_, id);
}

void RandomStream::refill() noexcept {
  const std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
      static_cast<std::uint32_t>(stream_id_), static_cast<std::uint32_t>(stream_id_ >> 32)};
  const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed_),
                                            static_cast<std::uint32_t>(seed_ >> 32)};
  buffer_ = philox4x32_10(ctr, key);
  ++block_;
  buffered_ = 4;
}

std::uint64_t RandomStream::next_u64() noexcept {
  if (buffered_ < 2) refill();
  const std::uint32_t lo = buffer_[4 - buffered_];
  const std::uint32_t hi = buffer_[5 - buffered_];
  buffered_ -= 2;
  return (static_cast<std::uint64_t>(hi) << 32) | lo;
}

double RandomStream::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::size_t RandomStream::uniform_index(std::size_t n) noexcept {
  // Lemire's multiply-and-reject.
  const std::uint64_t range = n;
  u128 m = static_cast<u128>(next_u64()) * range;
  auto low = static_cast<std::uint64_t>(m);
  if (low < range) {
    const std::uint64_t threshold = (0 - range) % range;
    while (low < threshold) {
      m = static_cast<u128>(next_u64()) * range;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::size_t>(m >> 64);
}

double RandomStream::normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_normal_ = v * f;
  has_spare_ = true;
  return u * f;
}

}  // namespace bonlab
