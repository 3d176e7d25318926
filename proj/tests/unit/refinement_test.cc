#include "relpose/refinement.h"

#include <random>

#include <gtest/gtest.h>

#include "../oracles.h"
#include "relpose/geometry.h"
#include "relpose/synthetic.h"

namespace relpose {
namespace {

struct Problem {
  SyntheticScene scene;
  std::vector<PointMatch> points;
};

Problem make_problem(std::uint64_t instance, double noise_px, int outlier_pct = 0) {
  PairConfig cfg;
  cfg.seed = 77;
  cfg.instance = instance;
  cfg.num_points = 60;
  cfg.noise_px = noise_px;
  cfg.outlier_ratio = outlier_pct / 100.0;
  Problem p{sample_pair(cfg), {}};
  p.points = p.scene.data.points;
  return p;
}

TEST(Refinement, RetractIsIdentityAtZero) {
  std::mt19937_64 rng(1);
  const RelativePose pose(oracle::random_rotation(rng), oracle::random_unit(rng));
  const RelativePose same = retract(pose, PoseDelta::Zero());
  EXPECT_LT((same.rotation - pose.rotation).norm(), 1e-15);
  EXPECT_LT((same.translation - pose.translation).norm(), 1e-15);
  const auto B = translation_basis(pose.translation);
  EXPECT_LT((B.transpose() * B - Eigen::Matrix2d::Identity()).norm(), 1e-14);
  EXPECT_LT((B.transpose() * pose.translation).norm(), 1e-14);
}

TEST(Refinement, ResidualsMatchOracle) {
  const Problem p = make_problem(0, 1.0);
  const RelativePose& gt = p.scene.gt_pose;
  RefineOptions opts;
  opts.point_threshold = 1.0;
  const auto signs = vp_signs(gt, p.scene.data.vps);
  Eigen::VectorXd r;
  pose_residuals(gt, p.points, p.scene.data.vps, signs, opts, r, nullptr);
  for (std::size_t i = 0; i < p.points.size(); ++i) {
    EXPECT_NEAR(r(i), oracle::sampson(gt.rotation, gt.translation, p.points[i].p, p.points[i].p_prime),
                1e-14);
  }
  const std::size_t np = p.points.size();
  for (std::size_t j = 0; j < p.scene.data.vps.size(); ++j) {
    const VPMatch& vm = p.scene.data.vps[j];
    // |v' x R v| is the sine of the VP angle.
    EXPECT_NEAR(r.segment<3>(np + 3 * j).norm() / std::sqrt(opts.vp_weight),
                std::sin(oracle::vp_angle(gt.rotation, vm.v, vm.v_prime)), 1e-12);
  }
}

TEST(Refinement, JacobianMatchesCentralDifferences) {
  std::mt19937_64 rng(2);
  for (int s = 0; s < 30; ++s) {
    const Problem p = make_problem(s, 1.0);
    RelativePose pose = p.scene.gt_pose;
    pose.rotation = pose.rotation * oracle::perturbation(rng, 0.02);
    pose.translation = (pose.translation + 0.05 * oracle::random_unit(rng)).normalized();
    RefineOptions opts;
    opts.point_threshold = 10.0;  // no truncation
    const auto& vps = p.scene.data.vps;
    const auto signs = vp_signs(pose, vps);
    Eigen::VectorXd r;
    Eigen::MatrixXd J;
    pose_residuals(pose, p.points, vps, signs, opts, r, &J);
    auto f = [&](const Eigen::VectorXd& x) {
      Eigen::VectorXd out;
      pose_residuals(retract(pose, x), p.points, vps, signs, opts, out, nullptr);
      return out;
    };
    const Eigen::MatrixXd Jn = oracle::numeric_jacobian(f, Eigen::VectorXd::Zero(5));
    EXPECT_LT((J - Jn).norm() / Jn.norm(), 1e-5);
  }
}

TEST(Refinement, TruncatedResidualsHaveZeroGradient) {
  const Problem p = make_problem(3, 1.0, 50);
  RefineOptions opts;
  const auto signs = vp_signs(p.scene.gt_pose, {});
  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  pose_residuals(p.scene.gt_pose, p.points, {}, signs, opts, r, &J);
  int truncated = 0;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    if (std::abs(r(i)) == opts.point_threshold) {
      ++truncated;
      EXPECT_EQ(J.row(i).norm(), 0.0);
    }
  }
  EXPECT_GT(truncated, 10);
}

TEST(Refinement, ConvergesFromPerturbedPose) {
  std::mt19937_64 rng(3);
  for (int s = 0; s < 20; ++s) {
    const Problem p = make_problem(100 + s, 0.0);
    RelativePose start = p.scene.gt_pose;
    start.rotation = start.rotation * oracle::perturbation(rng, 0.01);
    start.translation = (start.translation + 0.02 * oracle::random_unit(rng)).normalized();
    RefineOptions opts;
    opts.point_threshold = 1.0;
    RefineSummary summary;
    const RelativePose out = refine_pose(start, p.points, p.scene.data.vps, opts, &summary);
    EXPECT_LE(summary.final_cost, summary.initial_cost);
    const PoseError e = pose_errors(out, p.scene.gt_pose);
    EXPECT_LT(e.rotation, 1e-7);
    EXPECT_LT(e.translation, 1e-7);
    EXPECT_GT(summary.accepted_steps, 0);
    EXPECT_LE(summary.iterations, opts.max_iterations);
  }
}

TEST(Refinement, NeverWorsensCost) {
  std::mt19937_64 rng(4);
  for (int s = 0; s < 30; ++s) {
    const Problem p = make_problem(200 + s, 2.0, 30);
    RelativePose start(oracle::random_rotation(rng), oracle::random_unit(rng));
    RefineOptions opts;
    const auto signs = vp_signs(start, p.scene.data.vps);
    const double before = refine_cost(start, p.points, p.scene.data.vps, signs, opts);
    const RelativePose out = refine_pose(start, p.points, p.scene.data.vps, opts);
    EXPECT_LE(refine_cost(out, p.points, p.scene.data.vps, signs, opts), before);
    EXPECT_TRUE(out.is_valid(1e-9));
  }
}

TEST(Refinement, TranslationGivenRotation) {
  for (int s = 0; s < 20; ++s) {
    const Problem p = make_problem(300 + s, 0.0);
    const Vec3& t = p.scene.gt_pose.translation;
    const Vec3 est = translation_given_rotation(p.scene.gt_pose.rotation, p.points, -t);
    EXPECT_LT((est + t).norm(), 1e-9);
  }
}

}  // namespace
}  // namespace relpose
