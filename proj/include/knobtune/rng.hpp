// Deterministic random streams. Every stochastic component in the library
// draws from an explicitly seeded Rng; child streams are derived from a
// master seed with a fixed splitting rule so parallel execution order can
// never change results.
#pragma once

#include <cmath>
#include <cstdint>

namespace knobtune {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

// xoshiro256++ seeded through splitmix64.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = detail::splitmix64(sm);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result =
        detail::rotl64(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl64(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + uniform01() * (hi - lo); }

  // Uniform integer in [lo, hi], inclusive. Mask rejection, no modulo bias.
  long long uniform_int(long long lo, long long hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    std::uint64_t mask = span - 1;
    mask |= mask >> 1;
    mask |= mask >> 2;
    mask |= mask >> 4;
    mask |= mask >> 8;
    mask |= mask >> 16;
    mask |= mask >> 32;
    for (;;) {
      const std::uint64_t v = next_u64() & mask;
      if (v < span) return lo + static_cast<long long>(v);
    }
  }

  // Standard normal via Box-Muller (cosine branch; two uniforms per draw,
  // stateless so stream position stays predictable).
  double normal() {
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
  }

  double normal(double mean, double stddev) {
    return mean + stddev * normal();
  }

 private:
  std::uint64_t state_[4];
};

// Fixed splitting rule: hash the master seed with a stream tag and indices.
// Two distinct (tag, i, j) tuples give statistically independent streams.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag,
                                 std::uint64_t i = 0, std::uint64_t j = 0) {
  std::uint64_t s = master;
  detail::splitmix64(s);
  s ^= detail::splitmix64(s) + tag;
  s ^= detail::splitmix64(s) + i;
  s ^= detail::splitmix64(s) + j;
  return detail::splitmix64(s);
}

// Stream tags for derive_seed. Centralized so no two call sites collide.
namespace stream {
constexpr std::uint64_t kAgentInit = 0x01;
constexpr std::uint64_t kRollout = 0x02;
constexpr std::uint64_t kDeviceData = 0x03;
constexpr std::uint64_t kDeviceFit = 0x04;
constexpr std::uint64_t kBenchInit = 0x05;
constexpr std::uint64_t kTuneEntry = 0x06;
}  // namespace stream

}  // namespace knobtune
