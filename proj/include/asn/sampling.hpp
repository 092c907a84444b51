#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "asn/core_types.hpp"
#include "asn/rng.hpp"

namespace asn {

struct SamplerConfig {
  int patch_size = 5;
  int triplets = 40;
  std::uint64_t seed = 0;
  // Minimum 2D triangle area in px^2; integer pixel triangles have area k/2,
  // so the default rejects exactly the collinear ones.
  double collinearity_eps = 0.25;
  int max_resample = 16;

  void validate() const {
    if (patch_size < 3 || patch_size % 2 == 0) throw ContractError("sampler: patch size must be odd and >= 3");
    if (triplets < 1) throw ContractError("sampler: at least one triplet required");
    if (!(collinearity_eps >= 0.0)) throw ContractError("sampler: collinearity threshold must be >= 0");
    if (max_resample < 0) throw ContractError("sampler: resample budget must be >= 0");
  }
};

struct PatchEntry {
  PixelOffset offset;
  bool in_bounds = false;
  bool valid = false;
};

using Patch = std::vector<PatchEntry>;

// All r*r offsets around `center` in row-major order. Entries outside the
// image or on invalid points are kept but flagged.
inline Patch extract_patch(const PointMap& points, Pixel center, int r) {
  if (r < 1 || r % 2 == 0) throw ContractError("extract_patch: patch size must be odd");
  const int half = r / 2;
  Patch patch;
  patch.reserve(static_cast<std::size_t>(r) * r);
  for (int dv = -half; dv <= half; ++dv) {
    for (int du = -half; du <= half; ++du) {
      const int u = center.u + du;
      const int v = center.v + dv;
      PatchEntry e;
      e.offset = {du, dv};
      e.in_bounds = points.in_bounds(u, v);
      e.valid = e.in_bounds && points.valid(u, v);
      patch.push_back(e);
    }
  }
  return patch;
}

inline double projected_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  const Vec2 ab = b - a;
  const Vec2 ac = c - a;
  return 0.5 * std::abs(ab.x() * ac.y() - ab.y() * ac.x());
}

inline double projected_area(const Triplet& t) {
  return projected_area(Vec2(t[0].du, t[0].dv), Vec2(t[1].du, t[1].dv), Vec2(t[2].du, t[2].dv));
}

/// Draws up to cfg.triplets triplets of distinct valid patch pixels.
///
/// The draw sequence is a pure function of (cfg.seed, pixel) so any pixel can
/// be processed in isolation. A triplet whose projected area falls below
/// cfg.collinearity_eps is redrawn at most cfg.max_resample times and then
/// dropped, so the result may hold fewer than cfg.triplets entries. Fewer than
/// three valid pixels yields an empty set.
inline TripletSet sample_triplets(const Patch& patch, const SamplerConfig& cfg, Pixel pixel) {
  cfg.validate();
  TripletSet out;
  out.center = pixel;

  std::vector<PixelOffset> pool;
  pool.reserve(patch.size());
  for (const auto& e : patch) {
    if (e.valid) pool.push_back(e.offset);
  }
  const auto n = static_cast<std::uint64_t>(pool.size());
  if (n < 3) return out;

  CounterRng rng(pixel_stream_key(cfg.seed, pixel.u, pixel.v));
  out.triplets.reserve(static_cast<std::size_t>(cfg.triplets));
  for (int k = 0; k < cfg.triplets; ++k) {
    for (int attempt = 0; attempt <= cfg.max_resample; ++attempt) {
      // Three distinct indices without replacement.
      const auto a = rng.uniform_index(n);
      auto b = rng.uniform_index(n - 1);
      if (b >= a) ++b;
      auto c = rng.uniform_index(n - 2);
      const auto lo = std::min(a, b);
      const auto hi = std::max(a, b);
      if (c >= lo) ++c;
      if (c >= hi) ++c;
      const Triplet t{pool[a], pool[b], pool[c]};
      if (projected_area(t) >= cfg.collinearity_eps) {
        out.triplets.push_back(t);
        break;
      }
    }
  }
  return out;
}

}  // namespace asn
