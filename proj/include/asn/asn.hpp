#pragma once

// Adaptive surface normals: each pixel's normal is a confidence-weighted
// combination of cross-product normals of randomly sampled local triangles.
// A candidate's weight is the product of its projected image area and a
// geometric-context score derived from guidance-feature similarity.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "asn/backproject.hpp"
#include "asn/core_types.hpp"
#include "asn/parallel.hpp"
#include "asn/sampling.hpp"

namespace asn {

enum class GuidanceSource { constant, oracle_segments, external };

struct AsnConfig {
  SamplerConfig sampler;
  bool use_area = true;
  bool use_context = true;
  GuidanceSource guidance = GuidanceSource::constant;
};

inline constexpr double kDegenerateCross = 1e-12;

// Camera-facing unit normal of the plane through three points, or nullopt
// when the points are (numerically) collinear in 3D.
inline std::optional<Vec3> candidate_normal(const Vec3& pa, const Vec3& pb, const Vec3& pc, const Vec3& center) {
  const Vec3 cross = (pb - pa).cross(pc - pa);
  if (!(cross.norm() > kDegenerateCross)) return std::nullopt;
  return view_align(cross, center);
}

/// Normalized kernel weights of every patch entry relative to the patch center.
///
/// Invalid entries get weight 0; the valid ones sum to one.
class PatchWeights {
 public:
  PatchWeights(int patch_size, std::vector<double> weights) : size_(patch_size), weights_(std::move(weights)) {}

  [[nodiscard]] double at(PixelOffset o) const {
    const int half = size_ / 2;
    return weights_[static_cast<std::size_t>((o.dv + half) * size_ + (o.du + half))];
  }
  [[nodiscard]] std::span<const double> values() const { return weights_; }

 private:
  int size_;
  std::vector<double> weights_;
};

inline double kernel(double feature_distance) { return std::exp(-0.5 * feature_distance); }

inline PatchWeights similarity_weights(const GuidanceFeatureMap& f, Pixel center, const Patch& patch) {
  if (patch.empty()) throw ContractError("similarity_weights: empty patch");
  std::vector<double> w(patch.size(), 0.0);
  double total = 0.0;
  for (std::size_t j = 0; j < patch.size(); ++j) {
    if (!patch[j].valid) continue;
    const Pixel q{center.u + patch[j].offset.du, center.v + patch[j].offset.dv};
    w[j] = kernel(f.distance(center, q));
    total += w[j];
  }
  if (total > 0.0) {
    for (auto& x : w) x /= total;
  }
  const int r = static_cast<int>(std::lround(std::sqrt(static_cast<double>(patch.size()))));
  return {r, std::move(w)};
}

inline double triplet_confidence(const PatchWeights& weights, const Triplet& t) {
  return weights.at(t[0]) * weights.at(t[1]) * weights.at(t[2]);
}

/// Samples and evaluates the candidates of one pixel.
///
/// Returns the triplet set with areas, confidences and camera-facing normals
/// filled in. Candidates that are degenerate in 3D are removed.
inline TripletSet evaluate_candidates(const PointMap& points, const GuidanceFeatureMap& f, const AsnConfig& cfg,
                                      Pixel pixel) {
  const Patch patch = extract_patch(points, pixel, cfg.sampler.patch_size);
  TripletSet sampled = sample_triplets(patch, cfg.sampler, pixel);
  TripletSet out;
  out.center = pixel;
  if (sampled.empty()) return out;

  const PatchWeights weights = similarity_weights(f, pixel, patch);
  out.triplets.reserve(sampled.size());
  out.areas.reserve(sampled.size());
  out.confidences.reserve(sampled.size());
  out.normals.reserve(sampled.size());
  const Vec3& center = points.at(pixel);
  for (const auto& t : sampled.triplets) {
    const auto point = [&](PixelOffset o) -> const Vec3& { return points(pixel.u + o.du, pixel.v + o.dv); };
    const auto n = candidate_normal(point(t[0]), point(t[1]), point(t[2]), center);
    if (!n) continue;
    out.triplets.push_back(t);
    out.areas.push_back(projected_area(t));
    out.confidences.push_back(triplet_confidence(weights, t));
    out.normals.push_back(*n);
  }
  return out;
}

// Per-candidate combination weights. A confidence shared by every candidate
// cancels in the weighted mean and is left out so that constant guidance
// reproduces the context-free result exactly.
inline std::vector<double> candidate_weights(const TripletSet& set, const AsnConfig& cfg) {
  bool uniform_confidence = true;
  for (double g : set.confidences) uniform_confidence = uniform_confidence && g == set.confidences.front();
  const bool use_context = cfg.use_context && !uniform_confidence;

  std::vector<double> w(set.size(), 1.0);
  for (std::size_t k = 0; k < set.size(); ++k) {
    if (cfg.use_area) w[k] *= set.areas[k];
    if (use_context) w[k] *= set.confidences[k];
  }
  return w;
}

struct CombinedNormal {
  Vec3 normal = Vec3::Zero();
  bool valid = false;
  // Every weight vanished and the plain mean of the candidates was used.
  bool fallback = false;
};

inline CombinedNormal combine_candidates(const TripletSet& set, const AsnConfig& cfg, const Vec3& center) {
  CombinedNormal out;
  if (set.empty()) return out;
  std::vector<double> w = candidate_weights(set, cfg);
  double total = 0.0;
  for (double x : w) total += x;
  if (!(total > 0.0) || !std::isfinite(total)) {
    std::fill(w.begin(), w.end(), 1.0);
    total = static_cast<double>(w.size());
    out.fallback = true;
  }
  Vec3 sum = Vec3::Zero();
  for (std::size_t k = 0; k < set.size(); ++k) sum += w[k] * set.normals[k];
  sum /= total;
  if (!(sum.norm() > kDegenerateCross)) return out;
  out.normal = view_align(sum, center);
  out.valid = true;
  return out;
}

inline NormalMap asn_normals(const PointMap& points, const GuidanceFeatureMap& f, const AsnConfig& cfg) {
  require_same_shape(points, f, "asn_normals");
  cfg.sampler.validate();
  const int w = points.width();
  std::vector<Vec3> normals(points.size(), Vec3::Zero());
  std::vector<std::uint8_t> valid(points.size(), 0);
  parallel_for(points.height(), [&](int v) {
    for (int u = 0; u < w; ++u) {
      if (!points.valid(u, v)) continue;
      const Pixel p{u, v};
      const TripletSet set = evaluate_candidates(points, f, cfg, p);
      const CombinedNormal n = combine_candidates(set, cfg, points.at(p));
      if (!n.valid) continue;
      normals[points.index(u, v)] = n.normal;
      valid[points.index(u, v)] = 1;
    }
  });
  return {w, points.height(), std::move(normals), std::move(valid)};
}

}  // namespace asn
