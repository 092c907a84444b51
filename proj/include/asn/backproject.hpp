#pragma once

#include <vector>

#include "asn/core_types.hpp"

namespace asn {

inline PointMap backproject(const DepthMap& depth, const Intrinsics& intr) {
  if (depth.width() != intr.width || depth.height() != intr.height) {
    throw ContractError("backproject: depth dimensions do not match intrinsics");
  }
  std::vector<Vec3> points(depth.size(), Vec3::Zero());
  std::vector<std::uint8_t> valid(depth.mask().begin(), depth.mask().end());
  for (int v = 0; v < depth.height(); ++v) {
    for (int u = 0; u < depth.width(); ++u) {
      const auto i = depth.index(u, v);
      if (!valid[i]) continue;
      const double d = depth(u, v);
      points[i] = Vec3(d * ((u - intr.cx) / intr.fx), d * ((v - intr.cy) / intr.fy), d);
    }
  }
  return {depth.width(), depth.height(), std::move(points), std::move(valid)};
}

// Unit normal facing the camera as seen from point p. A normal exactly
// perpendicular to the viewing ray is returned unflipped.
inline Vec3 view_align(const Vec3& n, const Vec3& p) {
  const double len = n.norm();
  if (!(len > 0.0) || !std::isfinite(len)) throw DomainError("view_align: zero-length normal");
  const Vec3 unit = n / len;
  return unit.dot(p) > 0.0 ? Vec3(-unit) : unit;
}

}  // namespace asn
