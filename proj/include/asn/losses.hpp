#pragma once

// Multi-scale L1 depth loss, cosine normal loss on ASN normals, their
// weighted sum, and the analytic gradient of the sum with respect to the
// finest predicted depth.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "asn/asn.hpp"
#include "asn/backproject.hpp"
#include "asn/core_types.hpp"
#include "asn/parallel.hpp"

namespace asn {

struct LossConfig {
  double lambda = 0.8;
  double alpha = 5.0;
  int scales = 4;
  // true: scale s weighted by lambda^(s-3) exactly as the loss is usually
  // printed, which up-weights coarse scales for lambda < 1.
  // false: lambda^(3-s).
  bool legacy_exponent = true;

  void validate() const {
    if (!(lambda > 0.0 && lambda <= 1.0)) throw ContractError("loss: lambda must lie in (0, 1]");
    if (!(alpha >= 0.0)) throw ContractError("loss: alpha must be >= 0");
    if (scales < 1) throw ContractError("loss: at least one scale required");
  }

  // Weight of pyramid level `level`, 0 being the finest (s = 3).
  [[nodiscard]] double scale_weight(int level) const {
    return legacy_exponent ? std::pow(lambda, -level) : std::pow(lambda, level);
  }
};

// Halves resolution by averaging the valid pixels of each 2x2 block. Blocks
// without any valid pixel become invalid. Odd trailing rows/columns are dropped.
inline DepthMap downsample_valid(const DepthMap& depth) {
  const int w = depth.width() / 2;
  const int h = depth.height() / 2;
  if (w < 1 || h < 1) throw ContractError("downsample_valid: image too small");
  std::vector<double> values(static_cast<std::size_t>(w) * h, 0.0);
  std::vector<std::uint8_t> valid(values.size(), 0);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      double sum = 0.0;
      int n = 0;
      for (int j = 0; j < 2; ++j) {
        for (int i = 0; i < 2; ++i) {
          if (!depth.valid(2 * u + i, 2 * v + j)) continue;
          sum += depth(2 * u + i, 2 * v + j);
          ++n;
        }
      }
      if (n == 0) continue;
      values[static_cast<std::size_t>(v) * w + u] = sum / n;
      valid[static_cast<std::size_t>(v) * w + u] = 1;
    }
  }
  return {w, h, std::move(values), std::move(valid)};
}

// Ground truth at every level, finest first.
inline std::vector<DepthMap> depth_pyramid(const DepthMap& gt, int levels) {
  std::vector<DepthMap> out{gt};
  for (int l = 1; l < levels; ++l) out.push_back(downsample_valid(out.back()));
  return out;
}

namespace detail {

inline double mean_abs_difference(const DepthMap& pred, const DepthMap& gt) {
  require_same_shape(pred, gt, "depth_loss");
  std::vector<double> terms;
  terms.reserve(gt.size());
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (pred.mask()[i] && gt.mask()[i]) terms.push_back(std::abs(pred.values()[i] - gt.values()[i]));
  }
  if (terms.empty()) throw NumericalError("depth_loss: no jointly valid pixels at some scale");
  return pairwise_sum(terms) / static_cast<double>(terms.size());
}

}  // namespace detail

/// Weighted sum over pyramid levels of the mean absolute depth error.
///
/// preds[0] is the finest prediction and must match gt's size; preds[l] is
/// compared against gt downsampled l times. Only cfg.scales levels are used.
inline double depth_loss(std::span<const DepthMap> preds, const DepthMap& gt, const LossConfig& cfg) {
  cfg.validate();
  if (static_cast<int>(preds.size()) < cfg.scales) throw ContractError("depth_loss: fewer predictions than scales");
  const auto gts = depth_pyramid(gt, cfg.scales);
  std::vector<double> terms;
  for (int l = 0; l < cfg.scales; ++l) {
    terms.push_back(cfg.scale_weight(l) * detail::mean_abs_difference(preds[l], gts[l]));
  }
  return pairwise_sum(terms);
}

// Mean of 1 - cos over pixels where both maps are valid.
inline double normal_loss(const NormalMap& pred, const NormalMap& gt) {
  require_same_shape(pred, gt, "normal_loss");
  std::vector<double> terms;
  terms.reserve(gt.size());
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (pred.mask()[i] && gt.mask()[i]) terms.push_back(1.0 - pred.values()[i].dot(gt.values()[i]));
  }
  if (terms.empty()) throw NumericalError("normal_loss: no jointly valid pixels");
  return pairwise_sum(terms) / static_cast<double>(terms.size());
}

struct LossInputs {
  std::span<const DepthMap> preds;
  const DepthMap& gt_depth;
  const GuidanceFeatureMap& guidance;
  const NormalMap& gt_normals;
  const Intrinsics& intr;
  const AsnConfig& asn;
  const LossConfig& loss;
};

// depth_loss + alpha * normal_loss, normals computed by ASN on the finest
// prediction.
inline double total_loss(const LossInputs& in) {
  const double ld = depth_loss(in.preds, in.gt_depth, in.loss);
  if (in.loss.alpha == 0.0) return ld;
  const NormalMap n = asn_normals(backproject(in.preds[0], in.intr), in.guidance, in.asn);
  return ld + in.loss.alpha * normal_loss(n, in.gt_normals);
}

struct LossGradient {
  double loss = 0.0;
  // d(total_loss)/d(finest depth), row-major; zero on flagged pixels.
  std::vector<double> grad;
  std::vector<std::uint8_t> flagged;
  int flagged_count = 0;
};

// A candidate or combined normal this close to perpendicular to its viewing
// ray (|cos|) may change orientation under a small depth perturbation.
inline constexpr double kFlipMargin = 1e-3;

namespace detail {

// Derivative of the normalized vector x/|x| applied to an upstream gradient g.
inline Vec3 normalize_vjp(const Vec3& x, const Vec3& g) {
  const double len = x.norm();
  const Vec3 unit = x / len;
  return (g - unit * unit.dot(g)) / len;
}

}  // namespace detail

/// Analytic gradient of total_loss with respect to the finest predicted depth.
///
/// Triplet indices, projected areas and guidance confidences depend only on
/// pixel positions and guidance features, so they are constants here; the
/// depth enters through the back-projected points P = D * ray. Pixels whose
/// normal sits near a non-differentiable point (orientation flip, weight
/// fallback) are flagged together with every depth they read, and get zero
/// gradient. Coarser predictions do not depend on the finest depth.
inline LossGradient total_loss_grad(const LossInputs& in) {
  in.loss.validate();
  const DepthMap& pred = in.preds[0];
  const DepthMap& gt = in.gt_depth;
  require_same_shape(pred, gt, "total_loss_grad");
  const int w = pred.width();
  const int h = pred.height();

  LossGradient out;
  out.loss = total_loss(in);
  out.grad.assign(pred.size(), 0.0);
  out.flagged.assign(pred.size(), 0);

  // Depth term, finest level only.
  std::size_t joint = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) joint += pred.mask()[i] && gt.mask()[i];
  const double depth_scale = in.loss.scale_weight(0) / static_cast<double>(joint);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!(pred.mask()[i] && gt.mask()[i])) continue;
    const double diff = pred.values()[i] - gt.values()[i];
    out.grad[i] = depth_scale * static_cast<double>((diff > 0.0) - (diff < 0.0));
  }
  if (in.loss.alpha == 0.0) return out;

  const PointMap points = backproject(pred, in.intr);
  const auto ray = [&](int u, int v) { return in.intr.ray(u, v); };

  struct PixelResult {
    bool used = false;
    bool flagged = false;
    std::vector<std::pair<std::size_t, double>> contributions;
    std::vector<std::size_t> touched;
  };
  std::vector<PixelResult> results(pred.size());

  parallel_for(h, [&](int v) {
    for (int u = 0; u < w; ++u) {
      if (!points.valid(u, v)) continue;
      const Pixel px{u, v};
      const auto idx = points.index(u, v);
      const TripletSet set = evaluate_candidates(points, in.guidance, in.asn, px);
      const Vec3& center = points.at(px);
      const CombinedNormal combined = combine_candidates(set, in.asn, center);
      if (!combined.valid || !in.gt_normals.valid(u, v)) continue;
      PixelResult& res = results[idx];
      res.used = true;

      const double center_norm = center.norm();
      bool smooth = !combined.fallback;
      for (const auto& n : set.normals) smooth = smooth && std::abs(n.dot(center)) > kFlipMargin * center_norm;
      if (std::abs(combined.normal.dot(center)) <= kFlipMargin * center_norm) smooth = false;

      res.touched.push_back(idx);
      for (const auto& t : set.triplets) {
        for (const auto& o : t) res.touched.push_back(points.index(u + o.du, v + o.dv));
      }
      if (!smooth) {
        res.flagged = true;
        continue;
      }

      const std::vector<double> weights = candidate_weights(set, in.asn);
      double total = 0.0;
      for (double x : weights) total += x;
      Vec3 mean = Vec3::Zero();
      for (std::size_t k = 0; k < set.size(); ++k) mean += weights[k] * set.normals[k];
      mean /= total;

      // Upstream gradient of alpha * (1 - n.g) / N is -alpha/N * g; the final
      // orientation flip is locally constant.
      const double flip = combined.normal.dot(mean) > 0.0 ? 1.0 : -1.0;
      const Vec3 g_normal = -in.gt_normals(u, v) * flip;
      const Vec3 g_mean = detail::normalize_vjp(mean, g_normal);

      for (std::size_t k = 0; k < set.size(); ++k) {
        const Triplet& t = set.triplets[k];
        const Pixel a{u + t[0].du, v + t[0].dv};
        const Pixel b{u + t[1].du, v + t[1].dv};
        const Pixel c{u + t[2].du, v + t[2].dv};
        const Vec3 e1 = points.at(b) - points.at(a);
        const Vec3 e2 = points.at(c) - points.at(a);
        const Vec3 cross = e1.cross(e2);
        const double sign = set.normals[k].dot(cross) > 0.0 ? 1.0 : -1.0;
        const Vec3 g_cross = detail::normalize_vjp(cross, (weights[k] / total) * sign * g_mean);
        // d(e1 x e2) for P = D * ray at each vertex.
        res.contributions.emplace_back(points.index(a.u, a.v), g_cross.dot(ray(a.u, a.v).cross(e1 - e2)));
        res.contributions.emplace_back(points.index(b.u, b.v), g_cross.dot(ray(b.u, b.v).cross(e2)));
        res.contributions.emplace_back(points.index(c.u, c.v), g_cross.dot(e1.cross(ray(c.u, c.v))));
      }
    }
  });

  // Normalizer of the normal term: pixels valid in both normal maps.
  std::size_t used = 0;
  for (const auto& r : results) used += r.used;
  if (used == 0) throw NumericalError("total_loss_grad: no jointly valid normals");
  const double normal_scale = in.loss.alpha / static_cast<double>(used);

  for (const auto& r : results) {
    if (!r.flagged) continue;
    for (auto i : r.touched) out.flagged[i] = 1;
  }
  // Fixed accumulation order: pixels row-major, then candidates in draw order.
  for (const auto& r : results) {
    for (const auto& [i, g] : r.contributions) out.grad[i] += normal_scale * g;
  }
  for (std::size_t i = 0; i < out.grad.size(); ++i) {
    if (out.flagged[i]) {
      out.grad[i] = 0.0;
      ++out.flagged_count;
    }
  }
  return out;
}

}  // namespace asn
