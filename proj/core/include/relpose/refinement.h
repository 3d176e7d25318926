#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "relpose/types.h"

namespace relpose {

inline constexpr double kDefaultVPWeight =
    (1.5e-3 / (2.0 * 3.14159265358979323846 / 180.0)) * (1.5e-3 / (2.0 * 3.14159265358979323846 / 180.0));

struct RefineOptions {
  // Sampson residuals are truncated at this value (calibrated units).
  double point_threshold = 1.5e-3;
  // Weight of the squared VP residuals relative to squared Sampson distances:
  // (1.5e-3 / 2 deg)^2, i.e. both residuals scaled by their default inlier
  // thresholds.
  double vp_weight = kDefaultVPWeight;
  int max_iterations = 100;
  double initial_lambda = 1e-4;
  double function_tolerance = 1e-14;  // relative cost decrease to stop
};

using PoseDelta = Eigen::Matrix<double, 5, 1>;

// Local chart: R exp([w]x) for the first three parameters, and the unit
// translation moved inside its tangent plane for the last two.
RelativePose retract(const RelativePose& pose, const PoseDelta& delta);

// Orthonormal tangent basis of the unit translation used by `retract`.
Eigen::Matrix<double, 3, 2> translation_basis(const Vec3& t);

// Per-VP sign s in v' ~ s R v, fixed for the duration of a refinement.
std::vector<double> vp_signs(const RelativePose& pose, std::span<const VPMatch> vps);

// Stacked residuals: one truncated signed Sampson residual per point, then
// sqrt(vp_weight) * (v' x s R v) per VP (three rows each). With `jacobian`
// set, fills the derivative with respect to the chart parameters at zero.
void pose_residuals(const RelativePose& pose, std::span<const PointMatch> points,
                    std::span<const VPMatch> vps, std::span<const double> signs,
                    const RefineOptions& opts, Eigen::VectorXd& residuals,
                    Eigen::MatrixXd* jacobian);

// Sum of min(r^2, tau^2) over points plus vp_weight * |v' x s R v|^2 over VPs.
double refine_cost(const RelativePose& pose, std::span<const PointMatch> points,
                   std::span<const VPMatch> vps, std::span<const double> signs,
                   const RefineOptions& opts);

// Least-squares unit translation for a fixed rotation: the direction most
// orthogonal to every (R p) x p'. The sign follows `hint`.
Vec3 translation_given_rotation(const Mat3& R, std::span<const PointMatch> points,
                                const Vec3& hint);

struct RefineSummary {
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;
  int accepted_steps = 0;
};

// Levenberg-Marquardt over the five-parameter chart. The returned pose never
// has a higher cost than the input; without improvement the input is returned.
RelativePose refine_pose(const RelativePose& pose, std::span<const PointMatch> points,
                         std::span<const VPMatch> vps, const RefineOptions& opts = {},
                         RefineSummary* summary = nullptr);

}  // namespace relpose
