#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "asn/core_types.hpp"

namespace asn::test {

inline double angle_rad(const Vec3& a, const Vec3& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

// Hand-rolled generators for the property tests. std::mt19937_64 is used so
// the oracles do not share the library's own RNG.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : eng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(eng_); }

  Vec3 unit() {
    std::normal_distribution<double> n;
    Vec3 v;
    do {
      v = Vec3(n(eng_), n(eng_), n(eng_));
    } while (v.norm() < 1e-3);
    return v.normalized();
  }

  // Plane normal tilted at most max_tilt radians away from the optical axis.
  Vec3 tilted_normal(double max_tilt) {
    const double tilt = uniform(0.0, max_tilt);
    const double phi = uniform(0.0, 2.0 * M_PI);
    return Vec3(std::sin(tilt) * std::cos(phi), std::sin(tilt) * std::sin(phi), std::cos(tilt));
  }

  DepthMap depth(int w, int h, double lo, double hi, double p_invalid = 0.0) {
    std::vector<double> d(static_cast<std::size_t>(w) * h);
    std::vector<std::uint8_t> m(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
      m[i] = coin(p_invalid) ? 0 : 1;
      d[i] = m[i] ? uniform(lo, hi) : 0.0;
    }
    return {w, h, std::move(d), std::move(m)};
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

inline DepthMap constant_depth(int w, int h, double z) {
  return DepthMap(w, h, std::vector<double>(static_cast<std::size_t>(w) * h, z));
}

// Mean angle (degrees) over valid pixels at least `margin` from the border.
template <typename Ref>
double interior_mean_deg(const NormalMap& n, Ref&& reference, int margin) {
  double sum = 0.0;
  int count = 0;
  for (int v = margin; v < n.height() - margin; ++v) {
    for (int u = margin; u < n.width() - margin; ++u) {
      if (!n.valid(u, v)) continue;
      sum += angle_rad(n(u, v), reference(u, v)) * 180.0 / M_PI;
      ++count;
    }
  }
  return count ? sum / count : NAN;
}

}  // namespace asn::test
