#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace asn {

inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

// splitmix64 output function applied to x + gamma.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  std::uint64_t z = x + kGoldenGamma;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash_pixel(int u, int v) {
  return splitmix64((static_cast<std::uint64_t>(static_cast<std::uint32_t>(v)) << 32) |
                    static_cast<std::uint32_t>(u));
}

// Stream key of one pixel; streams of different pixels never share state.
constexpr std::uint64_t pixel_stream_key(std::uint64_t seed, int u, int v) {
  return splitmix64(seed ^ hash_pixel(u, v));
}

/// Counter-based generator: the i-th draw is a pure function of (key, i).
class CounterRng {
 public:
  explicit constexpr CounterRng(std::uint64_t key) : key_(key) {}

  constexpr std::uint64_t next() {
    ++counter_;
    return splitmix64(key_ + counter_ * kGoldenGamma);
  }

  // Uniform integer in [0, n), multiply-shift reduction.
  std::uint64_t uniform_index(std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller (cosine branch only, so draws stay aligned
  // with the counter).
  double normal() {
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  [[nodiscard]] constexpr std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace asn
