#include <gtest/gtest.h>

#include "asn/backproject.hpp"
#include "asn/core_types.hpp"
#include "support.hpp"

using namespace asn;

TEST(Project, OpticalAxisMapsToPrincipalPoint) {
  Intrinsics k{1.0, 1.0, 0.0, 0.0, 1, 1};
  const Vec2 p = project(Vec3(0, 0, 1), k);
  EXPECT_EQ(p, Vec2(0, 0));
}

TEST(Project, HandEvaluatedPinhole) {
  Intrinsics k{100.0, 100.0, 50.0, 50.0, 101, 101};
  const Vec2 p = project(Vec3(1, 0, 2), k);
  EXPECT_DOUBLE_EQ(p.x(), 100.0);
  EXPECT_DOUBLE_EQ(p.y(), 50.0);
}

TEST(Project, SymmetricAboutPrincipalPoint) {
  Intrinsics k{1.0, 1.0, 0.0, 0.0, 1, 1};
  const Vec2 p = project(Vec3(0, -1, 1), k);
  EXPECT_DOUBLE_EQ(p.x(), 0.0);
  EXPECT_DOUBLE_EQ(p.y(), -1.0);
}

TEST(Project, RejectsNonPositiveDepth) {
  Intrinsics k;
  EXPECT_THROW(project(Vec3(0, 0, 0), k), DomainError);
  EXPECT_THROW(project(Vec3(1, 2, -1), k), DomainError);
}

TEST(Project, InvertsBackprojectionOnValidPixels) {
  test::Gen g(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int w = g.integer(3, 24);
    const int h = g.integer(3, 24);
    Intrinsics k{g.uniform(5, 300), g.uniform(5, 300), g.uniform(0, w - 1), g.uniform(0, h - 1), w, h};
    const DepthMap d = g.depth(w, h, 0.1, 50.0, 0.2);
    const PointMap pts = backproject(d, k);
    for (int v = 0; v < h; ++v) {
      for (int u = 0; u < w; ++u) {
        if (!pts.valid(u, v)) continue;
        const Vec2 px = project(pts(u, v), k);
        EXPECT_NEAR(px.x(), u, 1e-6);
        EXPECT_NEAR(px.y(), v, 1e-6);
      }
    }
  }
}

TEST(Rasters, RejectLengthMismatch) {
  EXPECT_THROW(DepthMap(2, 2, std::vector<double>(3, 1.0)), ContractError);
  EXPECT_THROW(DepthMap(2, 2, std::vector<double>(4, 1.0), std::vector<std::uint8_t>(5, 1)), ContractError);
  EXPECT_THROW(PointMap(3, 1, std::vector<Vec3>(2, Vec3(0, 0, 1)), std::vector<std::uint8_t>(2, 1)), ContractError);
  EXPECT_THROW(NormalMap(1, 2, std::vector<Vec3>(1, Vec3(0, 0, -1)), std::vector<std::uint8_t>(1, 1)), ContractError);
  EXPECT_THROW(GuidanceFeatureMap(2, 2, 2, std::vector<double>(7, 0.0)), ContractError);
  EXPECT_THROW(SegmentMap(2, 3, std::vector<std::int32_t>(5, 0)), ContractError);
}

TEST(Rasters, RejectInvalidContents) {
  EXPECT_THROW(DepthMap(1, 1, std::vector<double>{0.0}), ContractError);
  EXPECT_THROW(DepthMap(1, 1, std::vector<double>{NAN}), ContractError);
  EXPECT_NO_THROW(DepthMap(1, 1, std::vector<double>{NAN}, std::vector<std::uint8_t>{0}));
  EXPECT_THROW(NormalMap(1, 1, {Vec3(0, 0, 2)}, {1}), ContractError);
  EXPECT_THROW(PointMap(1, 1, {Vec3(0, 0, -1)}, {1}), ContractError);
}

TEST(Rasters, InvalidNormalsAreZeroed) {
  const NormalMap n(2, 1, {Vec3(0, 0, -1), Vec3(5, 5, 5)}, {1, 0});
  EXPECT_EQ(n(1, 0), Vec3::Zero());
  EXPECT_EQ(n.valid_count(), 1u);
}

TEST(Rasters, CameraFacingCheck) {
  const PointMap p(1, 1, {Vec3(0, 0, 1)}, {1});
  EXPECT_TRUE(is_camera_facing(NormalMap(1, 1, {Vec3(0, 0, -1)}, {1}), p));
  EXPECT_FALSE(is_camera_facing(NormalMap(1, 1, {Vec3(0, 0, 1)}, {1}), p));
}

TEST(Intrinsics, DefaultsAreCentered) {
  const Intrinsics k = default_intrinsics(64);
  EXPECT_EQ(k.fx, 64.0);
  EXPECT_EQ(k.cx, 31.5);
  EXPECT_EQ(k.cy, 31.5);
  EXPECT_NO_THROW(k.validate());
  Intrinsics bad = k;
  bad.fx = 0.0;
  EXPECT_THROW(bad.validate(), ContractError);
}

TEST(Guidance, DistanceIsEuclidean) {
  const GuidanceFeatureMap f(2, 1, 2, {0.0, 0.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(f.distance({0, 0}, {1, 0}), 5.0);
  EXPECT_DOUBLE_EQ(f.distance({1, 0}, {1, 0}), 0.0);
}
