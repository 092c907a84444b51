#pragma once

// Desk-scale experiment drivers shared by the command-line tool and the
// acceptance suite. Every driver is deterministic given its arguments.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "asn/asn.hpp"
#include "asn/backproject.hpp"
#include "asn/baselines.hpp"
#include "asn/core_types.hpp"
#include "asn/io.hpp"
#include "asn/losses.hpp"
#include "asn/metrics.hpp"
#include "asn/synthetic.hpp"

namespace asn {

enum class Method { asn, sobel, lsq };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::asn:
      return "asn";
    case Method::sobel:
      return "sobel";
    case Method::lsq:
      return "lsq";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  if (s == "asn") return Method::asn;
  if (s == "sobel") return Method::sobel;
  if (s == "lsq") return Method::lsq;
  throw ContractError("unknown method '" + s + "'");
}

// lsq uses cfg.sampler.patch_size as its window.
inline NormalMap estimate_normals(Method m, const PointMap& points, const GuidanceFeatureMap& f, const AsnConfig& cfg) {
  switch (m) {
    case Method::asn:
      return asn_normals(points, f, cfg);
    case Method::sobel:
      return sobel_normal(points);
    case Method::lsq:
      return lsq_normal(points, cfg.sampler.patch_size);
  }
  throw ContractError("unknown method");
}

// Valid pixels of `segment` whose (2*margin+1)^2 neighborhood lies inside the
// image and entirely on that segment.
inline std::vector<std::uint8_t> segment_interior(const Scene& s, std::int32_t segment, int margin) {
  const int w = s.depth.width();
  const int h = s.depth.height();
  std::vector<std::uint8_t> mask(s.depth.size(), 0);
  for (int v = margin; v < h - margin; ++v) {
    for (int u = margin; u < w - margin; ++u) {
      bool inside = true;
      for (int dv = -margin; dv <= margin && inside; ++dv) {
        for (int du = -margin; du <= margin && inside; ++du) {
          inside = s.depth.valid(u + du, v + dv) && s.segments(u + du, v + dv) == segment;
        }
      }
      mask[s.depth.index(u, v)] = inside ? 1 : 0;
    }
  }
  return mask;
}

// Valid pixels at least `margin` pixels from the image border.
inline std::vector<std::uint8_t> image_interior(const Scene& s, int margin) {
  std::vector<std::uint8_t> mask(s.depth.size(), 0);
  for (int v = margin; v < s.depth.height() - margin; ++v) {
    for (int u = margin; u < s.depth.width() - margin; ++u) mask[s.depth.index(u, v)] = s.depth.valid(u, v) ? 1 : 0;
  }
  return mask;
}

// Pixels within `band` columns of the scene's discontinuity, away from the
// image border by `margin`.
inline std::vector<std::uint8_t> edge_band(const Scene& s, double band, int margin) {
  const int w = s.depth.width();
  const int h = s.depth.height();
  std::vector<std::uint8_t> mask(s.depth.size(), 0);
  if (std::isnan(s.edge_column)) return mask;
  for (int v = margin; v < h - margin; ++v) {
    for (int u = margin; u < w - margin; ++u) {
      mask[s.depth.index(u, v)] = std::abs(u - s.edge_column) <= band ? 1 : 0;
    }
  }
  return mask;
}

inline double mean_angle_error(const NormalMap& pred, const NormalMap& gt, std::span<const std::uint8_t> mask) {
  const auto err = angle_errors(pred, gt, mask);
  if (err.empty()) throw NumericalError("mean_angle_error: no pixel to evaluate");
  return pairwise_sum(err) / static_cast<double>(err.size());
}

// ---------------------------------------------------------------------------
// Hemisphere experiments

/// Stand-alone unit hemisphere used by the noise, triplet-count and patch-size
/// experiments. Errors are measured on sphere pixels at least `margin` pixels
/// away from the silhouette, so every patch size up to 2*margin+1 sees only
/// sphere points.
struct HemisphereSetup {
  int res = 64;
  HemisphereOptions sphere{Vec3(0.0, 0.0, 2.5), 1.0, false};
  int margin = 4;

  [[nodiscard]] Scene scene() const { return gen_hemisphere(default_intrinsics(res), sphere); }
};

// Mean angle error (deg) of ASN on the hemisphere with depth noise sigma * R.
inline double hemisphere_error(const HemisphereSetup& setup, double relative_sigma, std::uint64_t noise_seed,
                               const AsnConfig& cfg) {
  const Scene clean = setup.scene();
  const Scene noisy = add_noise(clean, relative_sigma * setup.sphere.radius, noise_seed);
  const PointMap points = backproject(noisy.depth, noisy.intr);
  const NormalMap n = asn_normals(points, constant_guidance(points.width(), points.height()), cfg);
  return mean_angle_error(n, clean.normals_gt, segment_interior(clean, 0, setup.margin));
}

struct ExperimentRow {
  std::string scene;
  std::string estimator;
  std::string config;
  std::string metric;
  double value = 0.0;
};

inline CsvTable to_table(const std::vector<ExperimentRow>& rows, std::vector<std::string> comments) {
  CsvTable t;
  t.comments = std::move(comments);
  t.header = {"scene", "estimator", "config_hash", "metric", "value"};
  for (const auto& r : rows) t.rows.push_back({r.scene, r.estimator, config_hash(r.config), r.metric, r.value});
  return t;
}

inline std::string describe(const AsnConfig& cfg) {
  return "patch=" + std::to_string(cfg.sampler.patch_size) + ";k=" + std::to_string(cfg.sampler.triplets) +
         ";seed=" + std::to_string(cfg.sampler.seed) + ";area=" + std::to_string(cfg.use_area) +
         ";context=" + std::to_string(cfg.use_context);
}

struct NoisePoint {
  double relative_sigma = 0.0;
  std::uint64_t seed = 0;
  double area_error = 0.0;
  double uniform_error = 0.0;
};

/// Area-weighted versus uniform averaging of candidates on the noisy
/// hemisphere. Context adaption is off in both arms.
inline std::vector<NoisePoint> noise_experiment(const HemisphereSetup& setup, const std::vector<double>& sigmas,
                                                const std::vector<std::uint64_t>& seeds, AsnConfig base = {}) {
  std::vector<NoisePoint> out;
  base.use_context = false;
  for (double sigma : sigmas) {
    for (auto seed : seeds) {
      AsnConfig area = base;
      area.use_area = true;
      area.sampler.seed = seed;
      AsnConfig uniform = area;
      uniform.use_area = false;
      out.push_back({sigma, seed, hemisphere_error(setup, sigma, seed, area),
                     hemisphere_error(setup, sigma, seed, uniform)});
    }
  }
  return out;
}

struct SweepPoint {
  int parameter = 0;
  double error = 0.0;  // mean over seeds
};

inline std::vector<SweepPoint> triplet_sweep(const HemisphereSetup& setup, double relative_sigma,
                                             const std::vector<int>& counts, const std::vector<std::uint64_t>& seeds,
                                             AsnConfig base = {}) {
  std::vector<SweepPoint> out;
  for (int k : counts) {
    std::vector<double> errs;
    for (auto seed : seeds) {
      AsnConfig cfg = base;
      cfg.sampler.triplets = k;
      cfg.sampler.seed = seed;
      errs.push_back(hemisphere_error(setup, relative_sigma, seed, cfg));
    }
    out.push_back({k, pairwise_sum(errs) / static_cast<double>(errs.size())});
  }
  return out;
}

inline std::vector<SweepPoint> patch_sweep(const HemisphereSetup& setup, double relative_sigma,
                                           const std::vector<int>& sizes, const std::vector<std::uint64_t>& seeds,
                                           AsnConfig base = {}) {
  std::vector<SweepPoint> out;
  for (int r : sizes) {
    std::vector<double> errs;
    for (auto seed : seeds) {
      AsnConfig cfg = base;
      cfg.sampler.patch_size = r;
      cfg.sampler.seed = seed;
      errs.push_back(hemisphere_error(setup, relative_sigma, seed, cfg));
    }
    out.push_back({r, pairwise_sum(errs) / static_cast<double>(errs.size())});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Discontinuity experiments

enum class EdgeSceneKind { step, wedge };

inline Scene edge_scene(EdgeSceneKind kind, int res) {
  const Intrinsics intr = default_intrinsics(res);
  if (kind == EdgeSceneKind::step) return gen_step(intr, 2.0, 3.0, res / 2);
  return gen_wedge(intr, WedgeOptions{});
}

struct BoundaryResult {
  double asn_oracle = 0.0;
  double asn_constant = 0.0;
  double sobel = 0.0;
};

// Mean angle errors within `band` px of the discontinuity.
inline BoundaryResult boundary_experiment(const Scene& scene, double band, AsnConfig cfg = {}) {
  const PointMap points = backproject(scene.depth, scene.intr);
  const auto mask = edge_band(scene, band, cfg.sampler.patch_size / 2);
  BoundaryResult r;
  cfg.use_context = true;
  r.asn_oracle = mean_angle_error(asn_normals(points, oracle_guidance(scene), cfg), scene.normals_gt, mask);
  r.asn_constant =
      mean_angle_error(asn_normals(points, constant_guidance(points.width(), points.height()), cfg), scene.normals_gt, mask);
  r.sobel = mean_angle_error(sobel_normal(points), scene.normals_gt, mask);
  return r;
}

struct AblationResult {
  double only_area = 0.0;
  double only_context = 0.0;
  double both = 0.0;
};

// Whole-image mean angle error of the three adaption variants; context
// adaption uses oracle guidance.
inline AblationResult ablation_experiment(const Scene& noisy, const NormalMap& gt_normals, AsnConfig base = {}) {
  const PointMap points = backproject(noisy.depth, noisy.intr);
  const GuidanceFeatureMap oracle = oracle_guidance(noisy);
  const auto mask = image_interior(noisy, base.sampler.patch_size / 2);
  const auto run = [&](bool area, bool context) {
    AsnConfig cfg = base;
    cfg.use_area = area;
    cfg.use_context = context;
    return mean_angle_error(asn_normals(points, oracle, cfg), gt_normals, mask);
  };
  return {run(true, false), run(false, true), run(true, true)};
}

// ---------------------------------------------------------------------------
// Gradient verification

struct GradcheckResult {
  double max_rel_error = 0.0;
  double mean_rel_error = 0.0;
  // Fraction of unflagged pixels with relative error below the tolerance.
  double fraction_within = 0.0;
  int checked = 0;
  int flagged = 0;
};

inline constexpr double kGradRelTolerance = 1e-4;

// |a - b| / max(|a|, |b|), zero when both vanish.
inline double relative_error(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

/// Compares the analytic gradient of total_loss against central differences
/// of total_loss itself.
///
/// Scene: a res x res hemisphere on its backing plane; the prediction is the
/// ground truth plus depth noise, coarser predictions are its pyramid, and
/// guidance is the oracle segment map.
inline GradcheckResult gradcheck(int res, std::uint64_t seed, double step, double relative_sigma = 0.01,
                                 const AsnConfig& cfg = {}, const LossConfig& loss = {}) {
  HemisphereOptions opt;
  opt.center = Vec3(0.0, 0.0, 2.5);
  const Scene clean = gen_hemisphere(default_intrinsics(res), opt);
  const Scene noisy = add_noise(clean, relative_sigma * opt.radius, seed);
  const GuidanceFeatureMap f = oracle_guidance(clean);
  AsnConfig asn_cfg = cfg;
  asn_cfg.sampler.seed = seed;

  std::vector<DepthMap> preds = depth_pyramid(noisy.depth, loss.scales);
  const auto inputs = [&](std::span<const DepthMap> p) {
    return LossInputs{p, clean.depth, f, clean.normals_gt, clean.intr, asn_cfg, loss};
  };
  const LossGradient analytic = total_loss_grad(inputs(preds));

  GradcheckResult out;
  out.flagged = analytic.flagged_count;
  std::vector<double> errs;
  const DepthMap& base = preds[0];
  for (std::size_t i = 0; i < base.size(); ++i) {
    if (!base.mask()[i] || analytic.flagged[i]) continue;
    std::vector<double> values(base.values().begin(), base.values().end());
    const std::vector<std::uint8_t> valid(base.mask().begin(), base.mask().end());
    const double d0 = values[i];
    values[i] = d0 + step;
    preds[0] = DepthMap(base.width(), base.height(), values, valid);
    const double plus = total_loss(inputs(preds));
    values[i] = d0 - step;
    preds[0] = DepthMap(base.width(), base.height(), values, valid);
    const double minus = total_loss(inputs(preds));
    values[i] = d0;
    preds[0] = DepthMap(base.width(), base.height(), std::move(values), valid);
    errs.push_back(relative_error(analytic.grad[i], (plus - minus) / (2.0 * step)));
  }
  if (errs.empty()) throw NumericalError("gradcheck: every pixel flagged");
  out.checked = static_cast<int>(errs.size());
  out.max_rel_error = *std::max_element(errs.begin(), errs.end());
  out.mean_rel_error = pairwise_sum(errs) / static_cast<double>(errs.size());
  out.fraction_within = static_cast<double>(std::count_if(errs.begin(), errs.end(),
                                                          [](double e) { return e < kGradRelTolerance; })) /
                        static_cast<double>(errs.size());
  return out;
}

// ---------------------------------------------------------------------------
// Timing

// Best-of-`repeats` wall time of one normal estimation, in seconds.
inline double time_estimator(Method m, const PointMap& points, const GuidanceFeatureMap& f, const AsnConfig& cfg,
                             int repeats = 3) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < repeats; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const NormalMap n = estimate_normals(m, points, f, cfg);
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
    if (n.valid_count() == 0) throw NumericalError("time_estimator: estimator produced no normals");
  }
  return best;
}

}  // namespace asn
