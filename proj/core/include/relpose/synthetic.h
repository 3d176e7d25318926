#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "relpose/correspondences.h"
#include "relpose/solvers.h"
#include "relpose/types.h"

namespace relpose {

using Rng = std::mt19937_64;

// Independent random streams of one scene. Geometry and noise are drawn from
// separate streams so that changing the noise level or the number of lines per
// VP leaves the remaining geometry untouched.
enum class RngStream : std::uint64_t {
  kGeometry = 1,
  kVPGeometry = 2,
  kNoise = 3,
  kVPNoise = 4,
  kExtraPoints = 5,
  kOutliers = 6,
};

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t instance, RngStream stream,
                          std::uint64_t sub = 0);

// Uniform on SO(3): normalized quaternion of four standard normals.
Mat3 random_rotation(Rng& rng);
Vec3 random_unit_vector(Rng& rng);

struct SceneConfig {
  std::uint64_t rng_seed = 0;
  std::uint64_t instance = 0;
  double point_mean_depth = 5.0;
  double point_std = 1.0;
  double focal = 1000.0;
  double noise_sigma = 0.0;      // pixels; sigma / focal per calibrated coordinate
  int lines_per_vp = 2;          // 2 gives the exact two-line intersection
  double ortho_deviation = 0.0;  // degrees away from 90 for perpendicular lines
  bool orient_vps = false;       // attach sign hints from the first supporting line
};

struct Provenance {
  std::vector<Vec3> vp_directions;    // camera-1 frame
  std::vector<Vec3> line_directions;  // per entry of data.lines
  std::vector<int> line_labels;       // VP index of each line, -1 when unrelated
  std::vector<bool> point_is_inlier;  // per entry of data.points
  bool coplanar = false;
  Vec3 plane_normal = Vec3::UnitZ();  // camera-1 frame, when coplanar
  double plane_distance = 0.0;
  double noise_sigma = 0.0;  // calibrated units
  int resamples = 0;
  bool exhausted = false;  // a draw still failed after the retry limit
  int scene_redraws = 0;   // whole-scene redraws (new pose) before success
};

struct SyntheticScene {
  RelativePose gt_pose;
  Mat3 rotation = Mat3::Identity();
  Vec3 raw_translation = Vec3::Zero();  // t = -R C, before normalization
  CorrespondenceSet data;
  MinimalSample sample;  // the entities of `data` in solver order
  Provenance provenance;
};

inline constexpr int kMaxResamples = 100;
inline constexpr double kMinDepth = 0.1;
inline constexpr double kMinSegmentLength = 1e-4;

// Entities needed by one solver, generated around a random pose.
SyntheticScene sample_scene(SolverKind kind, const SceneConfig& cfg);

// Additional generic points of the same scene with the configured noise.
std::vector<PointMatch> sample_extra_points(const SyntheticScene& scene, int count,
                                            const SceneConfig& cfg);

// Image pair for robust estimation: inlier points with noise, uniform random
// outlier matches, and lines grouped by planted VPs.
struct PairConfig {
  std::uint64_t seed = 0;
  std::uint64_t instance = 0;
  int num_points = 200;
  double outlier_ratio = 0.5;
  double noise_px = 1.0;
  int num_vps = 2;
  int lines_per_vp = 10;
  int num_random_lines = 0;
  double focal = 1000.0;
  double outlier_extent = 0.5;  // outliers uniform in [-e, e]^2, calibrated
  bool orient_vps = true;
  // Planted VP directions are drawn with pairwise angles of at least this
  // many degrees.
  double min_vp_separation_deg = 30.0;
  // Replace the algebraic least-squares VPs by the refined estimate of the
  // VP module, as a detection pipeline would report them.
  bool refine_vps = true;
};

SyntheticScene sample_pair(const PairConfig& cfg);

}  // namespace relpose
