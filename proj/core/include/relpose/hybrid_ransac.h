#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "relpose/correspondences.h"
#include "relpose/refinement.h"
#include "relpose/solvers.h"
#include "relpose/types.h"

namespace relpose {

struct RansacConfig {
  double point_threshold = 1.5e-3;       // Sampson, calibrated units
  double vp_threshold = 2.0 * 3.14159265358979323846 / 180.0;  // radians
  double confidence = 0.9999;
  int max_iterations = 5000;
  std::map<SolverKind, double> solver_priors;  // missing entries weigh 1
  double line_inlier_ratio_prior = 0.6;
  // Lower bound on the point and VP inlier ratios used for solver sampling.
  // A poor early model would otherwise starve the point and VP solvers in
  // favor of the line-only ones, whose ratio is fixed. Termination uses the
  // unclamped ratios.
  double min_sampling_ratio = 0.25;
  std::uint64_t rng_seed = 0;
  std::vector<SolverKind> enabled_solvers{kAllSolvers.begin(), kAllSolvers.end()};
  bool use_junctions = true;
  bool use_endpoints = true;
  bool refine = true;
  int refine_rounds = 3;
  // Refinement weight of the squared VP residuals. Empty derives it from the
  // thresholds, (point_threshold / vp_threshold)^2, so that both residual
  // types count alike at their inlier bounds.
  std::optional<double> vp_weight;
  // Estimated VPs are never exactly orthonormal.
  SolverOptions solver_options{.vp_rotation_tolerance = 0.05};

  double prior(SolverKind kind) const;
  double refine_vp_weight() const;
  // Throws std::invalid_argument.
  void validate() const;
};

enum class Termination { kConfidence, kMaxIterations };

struct SolverStats {
  int draws = 0;
  int successes = 0;  // calls returning at least one candidate
  double best_score = std::numeric_limits<double>::infinity();
};

struct RansacReport {
  RelativePose best_pose;
  std::vector<int> point_inliers;  // indices into point_pool(data, ...)
  std::vector<int> vp_inliers;
  double score = 0.0;
  int iterations = 0;
  std::map<SolverKind, SolverStats> per_solver_stats;
  Termination terminated_by = Termination::kMaxIterations;
  SolverKind best_solver = SolverKind::P5;
  RelativePose unrefined_pose;
  int pool_size = 0;
};

class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EstimationFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct InlierSets {
  std::vector<int> points;
  std::vector<int> vps;
};

InlierSets classify_inliers(const RelativePose& pose, std::span<const PointMatch> pool,
                            std::span<const VPMatch> vps, const RansacConfig& cfg);
InlierSets classify_inliers(const RelativePose& pose, const CorrespondenceSet& data,
                            const RansacConfig& cfg);

// Truncated quadratic cost, normalized by the squared thresholds: each point
// contributes min(r^2 / tau_p^2, 1) and each VP min(a^2 / tau_v^2, 1).
double msac_score(const RelativePose& pose, std::span<const PointMatch> pool,
                  std::span<const VPMatch> vps, const RansacConfig& cfg);
double msac_score(const RelativePose& pose, const CorrespondenceSet& data,
                  const RansacConfig& cfg);

// Probability of drawing each enabled solver given the modality inlier ratios.
// Solvers whose minimal sample cannot be drawn from `data` get weight zero.
std::map<SolverKind, double> solver_probabilities(const RansacConfig& cfg, int num_points,
                                                  int num_lines, int num_vps,
                                                  double point_ratio, double vp_ratio);

// Draws of one solver needed to hit an all-inlier sample with the configured
// confidence, given the modality inlier ratios.
double required_iterations(SolverKind kind, const RansacConfig& cfg, double point_ratio,
                           double vp_ratio);

RansacReport run_hybrid_ransac(const CorrespondenceSet& data, const RansacConfig& cfg);

}  // namespace relpose
