#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "relpose/types.h"

namespace relpose {

struct VPModel {
  Vec3 v = Vec3::UnitZ();
  Vec3 v_prime = Vec3::UnitZ();
  std::vector<int> inlier_lines;
};

struct VPFitConfig {
  double inlier_threshold = 2.0;  // pixels, applied in both images
  int min_support = 4;
  int max_models = 8;
  std::uint64_t rng_seed = 0;
  bool refine = true;
  double confidence = 0.99;
  int max_iterations = 1000;  // per extracted model
  // Pixel frames of the two images, used by the Tardif distance only.
  std::array<CameraIntrinsics, 2> intrinsics{};
};

// VP pair implied by two line matches. Empty when the lines coincide in
// either image; lines that are parallel in the image give a VP at infinity.
std::optional<std::pair<Vec3, Vec3>> vp_minimal_from_two_line_pairs(
    const LineMatch& a, const LineMatch& b, double tol = kTolerances.parallel);

// Distance in pixels from a segment endpoint to the line through the VP and
// the segment midpoint. Inputs are calibrated; K maps them to pixels.
double tardif_distance(const Vec3& v, const std::array<Vec3, 2>& segment,
                       const CameraIntrinsics& K);

// Sum of squared Tardif distances of the given lines in image 0 or 1.
double tardif_cost(const Vec3& v, std::span<const LineMatch> lines, std::span<const int> indices,
                   int image, const CameraIntrinsics& K);

// Least-squares VP of homogeneous lines: the right singular vector of the
// stacked lines with the smallest singular value. Rows are used as given, so
// the scale of each line acts as its weight.
Vec3 vp_least_squares(std::span<const Vec3> lines);

// Greedy sequential RANSAC over two-line samples. Models are sorted by
// support, largest first. Deterministic for a fixed rng_seed.
std::vector<VPModel> fit_vps_jointly(std::span<const LineMatch> lines, const VPFitConfig& cfg);

// Levenberg-Marquardt on the summed squared Tardif distances of the inliers,
// independently per image, over a 2D tangent chart of the sphere.
VPModel refine_vp(const VPModel& model, std::span<const LineMatch> lines, const VPFitConfig& cfg);

// Flips v so that it points from endpoint A towards endpoint B of the segment.
// Returns false when the segment gives no orientation.
bool orient_vp(Vec3& v, const std::array<Vec3, 2>& segment);

// VP match with sign hints from the first supporting line.
VPMatch to_vp_match(const VPModel& model, std::span<const LineMatch> lines);

}  // namespace relpose
