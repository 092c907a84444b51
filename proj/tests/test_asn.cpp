#include <gtest/gtest.h>

#include "asn/asn.hpp"
#include "asn/synthetic.hpp"
#include "support.hpp"

using namespace asn;

TEST(CandidateNormal, FrontoParallel) {
  const auto n = candidate_normal(Vec3(0, 0, 1), Vec3(1, 0, 1), Vec3(0, 1, 1), Vec3(0, 0, 1));
  ASSERT_TRUE(n);
  EXPECT_EQ(*n, Vec3(0, 0, -1));
}

TEST(CandidateNormal, WindingDoesNotMatter) {
  const auto n = candidate_normal(Vec3(0, 0, 1), Vec3(0, 1, 1), Vec3(1, 0, 1), Vec3(0, 0, 1));
  ASSERT_TRUE(n);
  EXPECT_EQ(*n, Vec3(0, 0, -1));
}

TEST(CandidateNormal, SlantedPlane) {
  // Points on x + z = 2.
  const auto n = candidate_normal(Vec3(0, 0, 2), Vec3(1, 0, 1), Vec3(0, 1, 2), Vec3(0, 0, 2));
  ASSERT_TRUE(n);
  const Vec3 expected = Vec3(-1, 0, -1) / std::sqrt(2.0);
  EXPECT_NEAR((*n - expected).norm(), 0.0, 1e-15);
}

TEST(CandidateNormal, CollinearIsDropped) {
  EXPECT_FALSE(candidate_normal(Vec3(0, 0, 1), Vec3(1, 1, 2), Vec3(2, 2, 3), Vec3(0, 0, 1)));
}

TEST(SimilarityWeights, ConstantFeaturesAreUniform) {
  const GuidanceFeatureMap f = constant_guidance(5, 5);
  const PointMap pts(5, 5, std::vector<Vec3>(25, Vec3(0, 0, 1)), std::vector<std::uint8_t>(25, 1));
  const PatchWeights w = similarity_weights(f, {2, 2}, extract_patch(pts, {2, 2}, 3));
  for (double x : w.values()) EXPECT_DOUBLE_EQ(x, 1.0 / 9.0);
}

TEST(SimilarityWeights, KernelValues) {
  EXPECT_EQ(kernel(0.0), 1.0);
  EXPECT_DOUBLE_EQ(kernel(2.0), std::exp(-1.0));
}

TEST(SimilarityWeights, NormalizesKernelValues) {
  // Center and its right neighbor at feature 0, every other pixel at distance 2.
  std::vector<double> feat(9, 2.0);
  feat[4] = feat[5] = 0.0;
  const GuidanceFeatureMap f(3, 3, 1, feat);
  const PointMap pts(3, 3, std::vector<Vec3>(9, Vec3(0, 0, 1)), std::vector<std::uint8_t>(9, 1));
  const PatchWeights w = similarity_weights(f, {1, 1}, extract_patch(pts, {1, 1}, 3));
  const double total = 2.0 + 7.0 * std::exp(-1.0);
  EXPECT_DOUBLE_EQ(w.at({0, 0}), 1.0 / total);
  EXPECT_DOUBLE_EQ(w.at({1, 0}), 1.0 / total);
  EXPECT_DOUBLE_EQ(w.at({-1, -1}), std::exp(-1.0) / total);
}

TEST(SimilarityWeights, InvalidEntriesGetZeroAndValidSumToOne) {
  test::Gen g(8);
  for (int trial = 0; trial < 200; ++trial) {
    const int w = g.integer(3, 10), h = g.integer(3, 10), c = g.integer(1, 4);
    std::vector<double> feat(static_cast<std::size_t>(w) * h * c);
    for (auto& x : feat) x = g.uniform(-3, 3);
    std::vector<std::uint8_t> valid(static_cast<std::size_t>(w) * h);
    for (auto& m : valid) m = g.coin(0.8);
    const Pixel px{g.integer(0, w - 1), g.integer(0, h - 1)};
    valid[static_cast<std::size_t>(px.v) * w + px.u] = 1;
    const PointMap pts(w, h, std::vector<Vec3>(valid.size(), Vec3(0, 0, 1)), valid);
    const int r = 2 * g.integer(1, 3) + 1;
    const Patch patch = extract_patch(pts, px, r);
    const PatchWeights wts = similarity_weights(GuidanceFeatureMap(w, h, c, feat), px, patch);
    double sum = 0.0;
    for (std::size_t j = 0; j < patch.size(); ++j) {
      if (!patch[j].valid) EXPECT_EQ(wts.values()[j], 0.0);
      EXPECT_GE(wts.values()[j], 0.0);
      EXPECT_LE(wts.values()[j], 1.0);
      sum += wts.values()[j];
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(TripletConfidence, UniformWeights) {
  const PatchWeights w(3, std::vector<double>(9, 1.0 / 9.0));
  EXPECT_DOUBLE_EQ(triplet_confidence(w, {PixelOffset{0, 0}, {1, 0}, {0, 1}}), 1.0 / 729.0);
}

TEST(TripletConfidence, ZeroMemberAnnihilates) {
  std::vector<double> v(9, 0.2);
  v[0] = 0.0;
  const PatchWeights w(3, v);
  EXPECT_EQ(triplet_confidence(w, {PixelOffset{-1, -1}, {1, 0}, {0, 1}}), 0.0);
}

TEST(TripletConfidence, Product) {
  std::vector<double> v(9, 0.0);
  v[4] = 0.5;
  v[5] = 0.25;
  v[7] = 0.25;
  const PatchWeights w(3, v);
  EXPECT_DOUBLE_EQ(triplet_confidence(w, {PixelOffset{0, 0}, {1, 0}, {0, 1}}), 0.03125);
}

TEST(Combine, ZeroTotalWeightFallsBackToPlainMean) {
  TripletSet set;
  set.triplets = {Triplet{}, Triplet{}};
  set.areas = {0.0, 1.0};
  set.confidences = {1.0, 0.0};
  set.normals = {Vec3(0, 0, -1), Vec3(0, -1, 0)};
  const CombinedNormal n = combine_candidates(set, AsnConfig{}, Vec3(0, 0, 1));
  ASSERT_TRUE(n.valid);
  EXPECT_TRUE(n.fallback);
  EXPECT_NEAR((n.normal - Vec3(0, -1, -1).normalized()).norm(), 0.0, 1e-15);
}

TEST(Combine, EmptySetIsInvalid) { EXPECT_FALSE(combine_candidates(TripletSet{}, AsnConfig{}, Vec3(0, 0, 1)).valid); }

TEST(Combine, WeightsFollowSwitches) {
  TripletSet set;
  set.triplets = {Triplet{}, Triplet{}};
  set.areas = {2.0, 3.0};
  set.confidences = {0.5, 0.25};
  set.normals = {Vec3(0, 0, -1), Vec3(0, 0, -1)};
  AsnConfig cfg;
  EXPECT_EQ(candidate_weights(set, cfg), (std::vector<double>{1.0, 0.75}));
  cfg.use_context = false;
  EXPECT_EQ(candidate_weights(set, cfg), (std::vector<double>{2.0, 3.0}));
  cfg.use_area = false;
  EXPECT_EQ(candidate_weights(set, cfg), (std::vector<double>{1.0, 1.0}));
}

namespace {

NormalMap asn_on(const Scene& s, const AsnConfig& cfg, const GuidanceFeatureMap* f = nullptr) {
  const PointMap pts = backproject(s.depth, s.intr);
  return asn_normals(pts, f ? *f : constant_guidance(pts.width(), pts.height()), cfg);
}

std::vector<AsnConfig> config_grid() {
  std::vector<AsnConfig> out;
  for (int r : {3, 5, 7}) {
    for (int k : {1, 10, 40}) {
      for (bool area : {false, true}) {
        for (bool context : {false, true}) {
          AsnConfig c;
          c.sampler.patch_size = r;
          c.sampler.triplets = k;
          c.sampler.seed = static_cast<std::uint64_t>(r * 100 + k);
          c.use_area = area;
          c.use_context = context;
          out.push_back(c);
        }
      }
    }
  }
  return out;
}

}  // namespace

TEST(AsnNormals, FrontoParallelPlaneIsExact) {
  const Scene s = gen_plane(default_intrinsics(24), Plane{Vec3(0, 0, 1), 2.0});
  for (const auto& cfg : config_grid()) {
    const NormalMap n = asn_on(s, cfg);
    EXPECT_EQ(n.valid_count(), s.depth.valid_count());
    for (std::size_t i = 0; i < n.size(); ++i) {
      if (n.mask()[i]) ASSERT_NEAR((n.values()[i] - Vec3(0, 0, -1)).norm(), 0.0, 1e-9);
    }
  }
}

TEST(AsnNormals, SlantedPlaneMatchesAnalyticNormal) {
  const Plane plane{Vec3(0.3, -0.2, 1.0).normalized(), 2.0};
  const Scene s = gen_plane(default_intrinsics(32), plane);
  const Vec3 expected = -plane.normal;
  const NormalMap n = asn_on(s, AsnConfig{});
  for (int v = 2; v < 30; ++v) {
    for (int u = 2; u < 30; ++u) {
      ASSERT_TRUE(n.valid(u, v));
      EXPECT_LT(test::angle_rad(n(u, v), expected), 1e-6);
    }
  }
}

// Each side of the step must match its own plane, edge-adjacent pixels included.
TEST(AsnNormals, StepEdgeWithOracleGuidance) {
  const Scene s = gen_step(default_intrinsics(32), 2.0, 3.0, 16);
  const GuidanceFeatureMap f = oracle_guidance(s);
  const NormalMap n = asn_on(s, AsnConfig{}, &f);
  double worst = 0.0;
  for (int v = 2; v < 30; ++v) {
    for (int u = 2; u < 30; ++u) {
      ASSERT_TRUE(n.valid(u, v));
      worst = std::max(worst, test::angle_rad(n(u, v), s.normals_gt(u, v)));
    }
  }
  EXPECT_LT(worst, 1e-3);
}

TEST(AsnNormals, ConstantGuidanceMakesContextSwitchBitIdentical) {
  const Scene s = add_noise(gen_hemisphere(default_intrinsics(32)), 0.01, 4);
  for (bool area : {false, true}) {
    AsnConfig on;
    on.use_area = area;
    AsnConfig off = on;
    off.use_context = false;
    const NormalMap a = asn_on(s, on);
    const NormalMap b = asn_on(s, off);
    ASSERT_EQ(a.valid_count(), b.valid_count());
    for (std::size_t i = 0; i < a.size(); ++i) {
      ASSERT_EQ(a.mask()[i], b.mask()[i]);
      ASSERT_EQ(a.values()[i], b.values()[i]);
    }
  }
}

TEST(AsnNormals, DepthScalingLeavesPlanarNormalsUnchanged) {
  test::Gen g(17);
  for (int trial = 0; trial < 10; ++trial) {
    const Plane plane{g.tilted_normal(0.6), g.uniform(1.0, 4.0)};
    const Scene s = gen_plane(default_intrinsics(20), plane);
    const double scale = g.uniform(0.1, 10.0);
    std::vector<double> d(s.depth.values().begin(), s.depth.values().end());
    for (auto& x : d) x *= scale;
    Scene scaled = s;
    scaled.depth = DepthMap(20, 20, d, std::vector<std::uint8_t>(s.depth.mask().begin(), s.depth.mask().end()));
    const NormalMap a = asn_on(s, AsnConfig{});
    const NormalMap b = asn_on(scaled, AsnConfig{});
    for (std::size_t i = 0; i < a.size(); ++i) {
      ASSERT_EQ(a.mask()[i], b.mask()[i]);
      if (a.mask()[i]) EXPECT_NEAR((a.values()[i] - b.values()[i]).norm(), 0.0, 1e-9);
    }
  }
}

TEST(AsnNormals, OutputIsUnitAndCameraFacing) {
  test::Gen g(99);
  for (int trial = 0; trial < 5; ++trial) {
    const Intrinsics k = default_intrinsics(16);
    const DepthMap d = g.depth(16, 16, 1.0, 3.0, 0.2);
    const PointMap pts = backproject(d, k);
    AsnConfig cfg;
    cfg.sampler.seed = trial;
    const NormalMap n = asn_normals(pts, constant_guidance(16, 16), cfg);
    EXPECT_TRUE(is_camera_facing(n, pts));
    for (std::size_t i = 0; i < n.size(); ++i) {
      if (n.mask()[i]) EXPECT_NEAR(n.values()[i].norm(), 1.0, 1e-12);
      if (n.mask()[i]) EXPECT_TRUE(pts.mask()[i]);
    }
  }
}

TEST(AsnNormals, RejectsGuidanceOfWrongShape) {
  const Scene s = gen_plane(default_intrinsics(8), Plane{Vec3(0, 0, 1), 2.0});
  EXPECT_THROW(asn_normals(backproject(s.depth, s.intr), constant_guidance(7, 8), AsnConfig{}), ContractError);
}
