#pragma once

// Analytic scenes with exact depth, normals and segment labels.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "asn/backproject.hpp"
#include "asn/core_types.hpp"
#include "asn/parallel.hpp"
#include "asn/rng.hpp"

namespace asn {

struct Scene {
  DepthMap depth;
  NormalMap normals_gt;
  SegmentMap segments;
  Intrinsics intr;
  // Image column of the depth or orientation discontinuity, NaN when the
  // scene has none.
  double edge_column = std::numeric_limits<double>::quiet_NaN();
};

// Plane {P : normal . P = offset}.
struct Plane {
  Vec3 normal = Vec3::UnitZ();
  double offset = 1.0;

  // Depth of the ray through pixel (u, v), if it hits the plane in front of
  // the camera.
  [[nodiscard]] std::optional<double> depth_at(const Intrinsics& intr, int u, int v) const {
    const double denom = normal.dot(intr.ray(u, v));
    if (denom == 0.0) return std::nullopt;
    const double t = offset / denom;
    if (!(t > 0.0) || !std::isfinite(t)) return std::nullopt;
    return t;
  }
};

namespace detail {

struct SceneBuffers {
  std::vector<double> depth;
  std::vector<std::uint8_t> valid;
  std::vector<Vec3> normals;
  std::vector<std::int32_t> segments;

  explicit SceneBuffers(const Intrinsics& intr) {
    const auto n = static_cast<std::size_t>(intr.width) * intr.height;
    depth.assign(n, 0.0);
    valid.assign(n, 0);
    normals.assign(n, Vec3::Zero());
    segments.assign(n, 0);
  }

  void set(const Intrinsics& intr, int u, int v, double d, const Vec3& n, std::int32_t seg) {
    const auto i = static_cast<std::size_t>(v) * intr.width + u;
    depth[i] = d;
    valid[i] = 1;
    normals[i] = view_align(n, d * intr.ray(u, v));
    segments[i] = seg;
  }

  Scene finish(const Intrinsics& intr, double edge_column = std::numeric_limits<double>::quiet_NaN()) && {
    Scene s{DepthMap(intr.width, intr.height, std::move(depth), valid),
            NormalMap(intr.width, intr.height, std::move(normals), valid),
            SegmentMap(intr.width, intr.height, std::move(segments)), intr, edge_column};
    return s;
  }
};

}  // namespace detail

inline Scene gen_plane(const Intrinsics& intr, const Plane& plane) {
  intr.validate();
  if (!(plane.normal.norm() > 0.0)) throw DomainError("gen_plane: zero plane normal");
  detail::SceneBuffers buf(intr);
  for (int v = 0; v < intr.height; ++v) {
    for (int u = 0; u < intr.width; ++u) {
      if (const auto d = plane.depth_at(intr, u, v)) buf.set(intr, u, v, *d, plane.normal, 0);
    }
  }
  return std::move(buf).finish(intr);
}

struct HemisphereOptions {
  Vec3 center{0.0, 0.0, 2.5};
  double radius = 1.0;
  // Without background, rays missing the sphere give invalid pixels.
  bool background = true;
};

/// Sphere (segment 0) resting on the plane z = center.z (segment 1).
///
/// Seen from the camera only the front half of the sphere is visible, the
/// backing plane fills the remainder of the image.
inline Scene gen_hemisphere(const Intrinsics& intr, const HemisphereOptions& opt = {}) {
  intr.validate();
  const Vec3& c = opt.center;
  const double R = opt.radius;
  if (!(R > 0.0) || !(c.z() - R > 0.0)) throw DomainError("gen_hemisphere: sphere must lie in front of the camera");
  detail::SceneBuffers buf(intr);
  for (int v = 0; v < intr.height; ++v) {
    for (int u = 0; u < intr.width; ++u) {
      const Vec3 ray = intr.ray(u, v);
      const double a = ray.squaredNorm();
      const double b = ray.dot(c);
      const double disc = b * b - a * (c.squaredNorm() - R * R);
      if (disc >= 0.0) {
        const double t = (b - std::sqrt(disc)) / a;
        const Vec3 p = t * ray;
        buf.set(intr, u, v, t, (p - c) / R, 0);
      } else if (opt.background) {
        buf.set(intr, u, v, c.z(), Vec3(0.0, 0.0, -1.0), 1);
      }
    }
  }
  return std::move(buf).finish(intr);
}

// Two fronto-parallel planes; columns < edge_column at near_depth, the rest at
// far_depth.
inline Scene gen_step(const Intrinsics& intr, double near_depth, double far_depth, int edge_column) {
  intr.validate();
  if (!(near_depth > 0.0) || !(far_depth > 0.0)) throw DomainError("gen_step: depths must be positive");
  if (edge_column < 0 || edge_column > intr.width) throw ContractError("gen_step: edge column outside image");
  detail::SceneBuffers buf(intr);
  for (int v = 0; v < intr.height; ++v) {
    for (int u = 0; u < intr.width; ++u) {
      const bool near_side = u < edge_column;
      buf.set(intr, u, v, near_side ? near_depth : far_depth, Vec3(0.0, 0.0, -1.0), near_side ? 0 : 1);
    }
  }
  return std::move(buf).finish(intr, edge_column - 0.5);
}

struct WedgeOptions {
  double crease_depth = 2.0;
  // Planes z = crease_depth + slope * x; they meet along x = 0, which images
  // to the principal column.
  double left_slope = 1.0;
  double right_slope = -1.0;
};

/// Two planes meeting along an image-vertical crease; per pixel the nearer
/// plane wins. Segment 0 is the left plane, segment 1 the right one.
inline Scene gen_wedge(const Intrinsics& intr, const WedgeOptions& opt = {}) {
  intr.validate();
  if (!(opt.crease_depth > 0.0)) throw DomainError("gen_wedge: crease depth must be positive");
  const Plane left{Vec3(-opt.left_slope, 0.0, 1.0), opt.crease_depth};
  const Plane right{Vec3(-opt.right_slope, 0.0, 1.0), opt.crease_depth};
  detail::SceneBuffers buf(intr);
  for (int v = 0; v < intr.height; ++v) {
    for (int u = 0; u < intr.width; ++u) {
      const auto dl = left.depth_at(intr, u, v);
      const auto dr = right.depth_at(intr, u, v);
      if (!dl && !dr) continue;
      const bool use_left = dl && (!dr || *dl < *dr || (*dl == *dr && u < intr.cx));
      if (use_left) {
        buf.set(intr, u, v, *dl, left.normal, 0);
      } else {
        buf.set(intr, u, v, *dr, right.normal, 1);
      }
    }
  }
  return std::move(buf).finish(intr, intr.cx);
}

/// Adds i.i.d. N(0, sigma^2) depth noise to every valid pixel.
///
/// Each pixel draws from its own counter stream, so the result depends only
/// on (seed, pixel). Ground-truth normals and segments are kept. A draw that
/// would push the depth to a non-positive value invalidates the pixel.
inline Scene add_noise(const Scene& scene, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw DomainError("add_noise: sigma must be non-negative");
  if (sigma == 0.0) return scene;
  const auto& d = scene.depth;
  std::vector<double> values(d.values().begin(), d.values().end());
  std::vector<std::uint8_t> valid(d.mask().begin(), d.mask().end());
  constexpr std::uint64_t kNoiseSalt = 0x6e6f697365ULL;
  for (int v = 0; v < d.height(); ++v) {
    for (int u = 0; u < d.width(); ++u) {
      const auto i = d.index(u, v);
      if (!valid[i]) continue;
      CounterRng rng(pixel_stream_key(seed ^ kNoiseSalt, u, v));
      values[i] += sigma * rng.normal();
      if (!(values[i] > 0.0)) {
        values[i] = 0.0;
        valid[i] = 0;
      }
    }
  }
  Scene out = scene;
  out.depth = DepthMap(d.width(), d.height(), std::move(values), std::move(valid));
  return out;
}

inline constexpr double kOracleSeparation = 10.0;

// One-hot segment labels scaled by `separation`; pixels of different segments
// sit separation*sqrt(2) apart in feature space.
inline GuidanceFeatureMap oracle_guidance(const SegmentMap& segments, double separation = kOracleSeparation) {
  const auto labels = segments.labels();
  std::int32_t max_label = 0;
  for (auto l : labels) {
    if (l < 0) throw ContractError("oracle_guidance: negative segment label");
    max_label = std::max(max_label, l);
  }
  const int channels = max_label + 1;
  std::vector<double> features(labels.size() * static_cast<std::size_t>(channels), 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    features[i * channels + static_cast<std::size_t>(labels[i])] = separation;
  }
  return {segments.width(), segments.height(), channels, std::move(features)};
}

inline GuidanceFeatureMap oracle_guidance(const Scene& scene, double separation = kOracleSeparation) {
  return oracle_guidance(scene.segments, separation);
}

}  // namespace asn
