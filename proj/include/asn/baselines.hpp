#pragma once

// Comparator normal estimators: a Sobel tangent operator, a least-squares
// plane fit, and the virtual-normal loss over globally sampled triplets.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include <Eigen/Eigenvalues>

#include "asn/backproject.hpp"
#include "asn/core_types.hpp"
#include "asn/parallel.hpp"
#include "asn/rng.hpp"

namespace asn {

inline constexpr double kDegenerate = 1e-12;
inline constexpr double kRankTolerance = 1e-12;

inline NormalMap sobel_normal(const PointMap& points) {
  const int w = points.width();
  const int h = points.height();
  if (w < 3 || h < 3) throw ContractError("sobel_normal: image must be at least 3x3");
  static constexpr std::array<std::array<int, 3>, 3> kx{{{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}}};

  std::vector<Vec3> normals(points.size(), Vec3::Zero());
  std::vector<std::uint8_t> valid(points.size(), 0);
  parallel_for(h, [&](int v) {
    if (v == 0 || v == h - 1) return;
    for (int u = 1; u < w - 1; ++u) {
      Vec3 tx = Vec3::Zero();
      Vec3 ty = Vec3::Zero();
      bool supported = true;
      for (int j = -1; j <= 1 && supported; ++j) {
        for (int i = -1; i <= 1; ++i) {
          if (!points.valid(u + i, v + j)) {
            supported = false;
            break;
          }
          const Vec3& p = points(u + i, v + j);
          tx += kx[j + 1][i + 1] * p;
          ty += kx[i + 1][j + 1] * p;
        }
      }
      if (!supported) continue;
      const Vec3 n = tx.cross(ty);
      if (!(n.norm() > kDegenerate * tx.norm() * ty.norm())) continue;
      normals[points.index(u, v)] = view_align(n, points(u, v));
      valid[points.index(u, v)] = 1;
    }
  });
  return {w, h, std::move(normals), std::move(valid)};
}

/// Plane fit over the valid r x r neighbors of every pixel.
///
/// The normal is the eigenvector of the smallest eigenvalue of the centered
/// neighbor covariance. Neighborhoods whose two smallest eigenvalues coincide
/// (collinear or coincident points) produce invalid pixels.
inline NormalMap lsq_normal(const PointMap& points, int r) {
  if (r < 3 || r % 2 == 0) throw ContractError("lsq_normal: patch size must be odd and >= 3");
  const int w = points.width();
  const int h = points.height();
  const int half = r / 2;
  std::vector<Vec3> normals(points.size(), Vec3::Zero());
  std::vector<std::uint8_t> valid(points.size(), 0);
  parallel_for(h, [&](int v) {
    std::vector<Vec3> nbrs;
    nbrs.reserve(static_cast<std::size_t>(r) * r);
    for (int u = 0; u < w; ++u) {
      if (!points.valid(u, v)) continue;
      nbrs.clear();
      Vec3 centroid = Vec3::Zero();
      for (int dv = -half; dv <= half; ++dv) {
        for (int du = -half; du <= half; ++du) {
          if (!points.in_bounds(u + du, v + dv) || !points.valid(u + du, v + dv)) continue;
          nbrs.push_back(points(u + du, v + dv));
          centroid += nbrs.back();
        }
      }
      if (nbrs.size() < 3) continue;
      centroid /= static_cast<double>(nbrs.size());
      Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
      for (const auto& p : nbrs) {
        const Vec3 d = p - centroid;
        cov.noalias() += d * d.transpose();
      }
      cov /= static_cast<double>(nbrs.size());
      const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
      const Vec3 lambda = eig.eigenvalues();
      if (lambda(1) - lambda(0) <= kRankTolerance * std::max(1.0, lambda(2))) continue;
      normals[points.index(u, v)] = view_align(eig.eigenvectors().col(0), points(u, v));
      valid[points.index(u, v)] = 1;
    }
  });
  return {w, h, std::move(normals), std::move(valid)};
}

struct VirtualNormalConfig {
  int triplets = 1000;
  std::uint64_t seed = 0;
  double min_dist = 0.1;
  double min_angle_deg = 5.0;
};

namespace detail {

// Interior angles of the triangle all exceed min_angle and its sides are at
// least min_dist long.
inline bool admissible_triangle(const Vec3& a, const Vec3& b, const Vec3& c, double min_dist, double min_angle) {
  const std::array<Vec3, 3> p{a, b, c};
  for (int i = 0; i < 3; ++i) {
    const Vec3 e1 = p[(i + 1) % 3] - p[i];
    const Vec3 e2 = p[(i + 2) % 3] - p[i];
    if (e1.norm() < min_dist) return false;
    const double cosang = e1.dot(e2) / (e1.norm() * e2.norm());
    if (!(std::acos(std::clamp(cosang, -1.0, 1.0)) > min_angle)) return false;
  }
  return true;
}

}  // namespace detail

/// Mean distance between predicted and ground-truth plane normals of globally
/// sampled pixel triplets. Admissibility is judged on the ground truth.
///
/// At most 10*M draws are made; the mean is over the admissible triplets that
/// were found. Throws NumericalError when none were found.
inline double virtual_normal_loss(const PointMap& pred, const PointMap& gt, const VirtualNormalConfig& cfg) {
  require_same_shape(pred, gt, "virtual_normal_loss");
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt.mask()[i] && pred.mask()[i]) pool.push_back(i);
  }
  if (pool.size() < 3) throw NumericalError("virtual_normal_loss: fewer than 3 jointly valid pixels");
  if (cfg.triplets < 1) throw ContractError("virtual_normal_loss: at least one triplet required");

  const double min_angle = cfg.min_angle_deg * std::numbers::pi / 180.0;
  CounterRng rng(splitmix64(cfg.seed));
  const auto n = static_cast<std::uint64_t>(pool.size());
  std::vector<double> diffs;
  const long budget = 10L * cfg.triplets;
  for (long draw = 0; draw < budget && static_cast<int>(diffs.size()) < cfg.triplets; ++draw) {
    const auto ia = pool[rng.uniform_index(n)];
    const auto ib = pool[rng.uniform_index(n)];
    const auto ic = pool[rng.uniform_index(n)];
    const Vec3& ga = gt.values()[ia];
    const Vec3& gb = gt.values()[ib];
    const Vec3& gc = gt.values()[ic];
    if (!detail::admissible_triangle(ga, gb, gc, cfg.min_dist, min_angle)) continue;
    const Vec3 ngt = (gb - ga).cross(gc - ga).normalized();
    const Vec3& pa = pred.values()[ia];
    const Vec3 cp = (pred.values()[ib] - pa).cross(pred.values()[ic] - pa);
    if (!(cp.norm() > kDegenerate)) continue;
    diffs.push_back((cp.normalized() - ngt).norm());
  }
  if (diffs.empty()) throw NumericalError("virtual_normal_loss: no admissible triplet found");
  return pairwise_sum(diffs) / static_cast<double>(diffs.size());
}

}  // namespace asn
