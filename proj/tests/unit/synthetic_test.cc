#include "relpose/synthetic.h"

#include <numbers>

#include <gtest/gtest.h>

#include "../oracles.h"
#include "relpose/geometry.h"

namespace relpose {
namespace {

SceneConfig config(std::uint64_t instance, double sigma = 0.0) {
  SceneConfig c;
  c.rng_seed = 5;
  c.instance = instance;
  c.noise_sigma = sigma;
  return c;
}

TEST(Synthetic, StreamSeedsAreDistinct) {
  EXPECT_NE(stream_seed(1, 0, RngStream::kGeometry), stream_seed(1, 0, RngStream::kNoise));
  EXPECT_NE(stream_seed(1, 0, RngStream::kGeometry), stream_seed(1, 1, RngStream::kGeometry));
  EXPECT_NE(stream_seed(1, 0, RngStream::kVPGeometry, 0),
            stream_seed(1, 0, RngStream::kVPGeometry, 1));
  EXPECT_EQ(stream_seed(9, 3, RngStream::kOutliers), stream_seed(9, 3, RngStream::kOutliers));
}

TEST(Synthetic, RandomRotationIsProper) {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const Mat3 R = random_rotation(rng);
    EXPECT_LT((R.transpose() * R - Mat3::Identity()).norm(), 1e-12);
    EXPECT_NEAR(R.determinant(), 1.0, 1e-12);
  }
}

class SceneConstraints : public ::testing::TestWithParam<SolverKind> {};

TEST_P(SceneConstraints, NoiselessScenesSatisfyTheirConfiguration) {
  const SolverKind kind = GetParam();
  const SampleSize size = sample_size(kind);
  for (int i = 0; i < 100; ++i) {
    const SyntheticScene sc = sample_scene(kind, config(i));
    const RelativePose& gt = sc.gt_pose;
    ASSERT_FALSE(sc.provenance.exhausted);
    EXPECT_EQ(static_cast<int>(sc.sample.points.size()), size.points);
    EXPECT_EQ(static_cast<int>(sc.sample.lines.size()), size.lines);
    EXPECT_EQ(static_cast<int>(sc.sample.vps.size()), size.vps);
    EXPECT_NEAR(gt.translation.norm(), 1.0, 1e-12);
    for (const PointMatch& m : sc.sample.points) {
      EXPECT_LT(std::abs(oracle::epipolar(gt.rotation, gt.translation, m.p, m.p_prime)), 1e-12);
      EXPECT_TRUE(is_in_front(gt, m));
    }
    for (const VPMatch& v : sc.sample.vps) {
      EXPECT_LT(oracle::vp_angle(gt.rotation, v.v, v.v_prime), 1e-9);
    }
    // Coplanar lines pairwise satisfy the Pluecker coplanarity condition.
    if (sc.provenance.coplanar) {
      const auto& ls = sc.sample.lines;
      for (std::size_t a = 0; a < ls.size(); ++a) {
        for (std::size_t b = a + 1; b < ls.size(); ++b) {
          const auto La = oracle::line_from_views(gt.rotation, gt.translation, ls[a].l, ls[a].l_prime);
          const auto Lb = oracle::line_from_views(gt.rotation, gt.translation, ls[b].l, ls[b].l_prime);
          EXPECT_LT(std::abs(oracle::reciprocal_product(La, Lb)), 1e-9);
        }
      }
    }
  }
}

INSTANTIATE_TEST_SUITE_P(All, SceneConstraints, ::testing::ValuesIn(kAllSolvers),
                         [](const auto& info) { return std::string(solver_tag(info.param)); });

TEST(Synthetic, PerpendicularLinesHonorDeviation) {
  for (double dev : {0.0, 5.0, 10.0}) {
    for (int i = 0; i < 50; ++i) {
      SceneConfig c = config(i);
      c.ortho_deviation = dev;
      const SyntheticScene sc = sample_scene(SolverKind::P2L1V1Perp, c);
      const Vec3 d = sc.provenance.line_directions[0];
      const Vec3 D = sc.provenance.vp_directions[0];
      EXPECT_NEAR(std::abs(std::numbers::pi / 2 - oracle::angle(d, D)), dev * std::numbers::pi / 180,
                  1e-9);
    }
  }
}

TEST(Synthetic, DeterministicAndNoiseIndependentGeometry) {
  const SyntheticScene a = sample_scene(SolverKind::P3V1, config(7));
  const SyntheticScene b = sample_scene(SolverKind::P3V1, config(7));
  EXPECT_EQ(a.gt_pose.rotation, b.gt_pose.rotation);
  EXPECT_EQ(a.sample.points[0].p, b.sample.points[0].p);
  const SyntheticScene noisy = sample_scene(SolverKind::P3V1, config(7, 1.0));
  EXPECT_EQ(a.gt_pose.rotation, noisy.gt_pose.rotation);
  const double shift = (a.sample.points[0].p - noisy.sample.points[0].p).norm();
  EXPECT_GT(shift, 0.0);
  EXPECT_LT(shift, 1e-2);
}

TEST(Synthetic, LinesPerVPKeepsPoseFixed) {
  SceneConfig c = config(11);
  c.lines_per_vp = 3;
  const SyntheticScene a = sample_scene(SolverKind::P2V2, c);
  c.lines_per_vp = 20;
  const SyntheticScene b = sample_scene(SolverKind::P2V2, c);
  EXPECT_EQ(a.gt_pose.rotation, b.gt_pose.rotation);
  EXPECT_EQ(a.sample.points[0].p, b.sample.points[0].p);
}

TEST(Synthetic, NoiseLevelMatchesSigma) {
  double sum = 0.0;
  int count = 0;
  for (int i = 0; i < 200; ++i) {
    const SyntheticScene clean = sample_scene(SolverKind::P5, config(i));
    const SyntheticScene noisy = sample_scene(SolverKind::P5, config(i, 2.0));
    for (std::size_t k = 0; k < clean.sample.points.size(); ++k) {
      const Vec3 d = (noisy.sample.points[k].p - clean.sample.points[k].p) * 1000.0;
      sum += d.head<2>().squaredNorm();
      count += 2;
    }
  }
  EXPECT_NEAR(std::sqrt(sum / count), 2.0, 0.1);
}

TEST(Synthetic, PairHasPlantedStructure) {
  PairConfig cfg;
  cfg.num_points = 100;
  cfg.outlier_ratio = 0.3;
  cfg.noise_px = 0.0;
  const SyntheticScene sc = sample_pair(cfg);
  ASSERT_EQ(sc.data.points.size(), 100u);
  int inliers = 0;
  for (std::size_t i = 0; i < sc.data.points.size(); ++i) {
    const bool in = sc.provenance.point_is_inlier[i];
    inliers += in;
    if (in) {
      EXPECT_LT(epipolar_residual(sc.gt_pose, sc.data.points[i]), 1e-12);
    }
  }
  EXPECT_EQ(inliers, 70);
  ASSERT_EQ(sc.data.vps.size(), 2u);
  EXPECT_EQ(sc.data.lines.size(), 20u);
  for (const VPMatch& v : sc.data.vps) {
    EXPECT_EQ(v.supporting_lines.size(), 10u);
    EXPECT_LT(oracle::vp_angle(sc.gt_pose.rotation, v.v, v.v_prime), 1e-9);
  }
  const double sep = oracle::angle(sc.provenance.vp_directions[0], sc.provenance.vp_directions[1]);
  EXPECT_GE(std::min(sep, std::numbers::pi - sep), 30.0 * std::numbers::pi / 180 - 1e-12);
}

TEST(Synthetic, ExtraPointsBelongToTheScene) {
  const SyntheticScene sc = sample_scene(SolverKind::P2V1Perp, config(3));
  const auto extra = sample_extra_points(sc, 20, config(3));
  ASSERT_EQ(extra.size(), 20u);
  for (const PointMatch& m : extra) EXPECT_LT(epipolar_residual(sc.gt_pose, m), 1e-12);
}

}  // namespace
}  // namespace relpose
