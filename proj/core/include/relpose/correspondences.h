#pragma once

#include <array>
#include <vector>

#include "relpose/types.h"

namespace relpose {

// All calibrated entities of one image pair. Junctions and endpoints are
// derived from `lines` and kept apart from the measured points so that the
// estimator can switch them on and off.
struct CorrespondenceSet {
  std::vector<PointMatch> points;
  std::vector<LineMatch> lines;
  std::vector<VPMatch> vps;

  std::vector<PointMatch> junction_points;
  std::vector<std::array<int, 2>> junction_sources;  // line index pairs
  std::vector<PointMatch> endpoint_points;
  std::vector<std::array<int, 2>> endpoint_sources;  // (line index, endpoint 0/1)
};

// Emits a junction for every line pair whose intersection lies within the
// endpoint span of both segments, in both images.
void derive_junctions(CorrespondenceSet& data, double parallel_tol = kTolerances.parallel);

// Both endpoints of every line as point correspondences.
void derive_endpoints(CorrespondenceSet& data);

// Points used for sampling and scoring: measured points, then junctions, then
// endpoints. Inlier indices reported by the estimator refer to this order.
std::vector<PointMatch> point_pool(const CorrespondenceSet& data, bool use_junctions,
                                   bool use_endpoints);

// Parameter of the projection of x onto segment a -> b (0 at a, 1 at b).
double segment_parameter(const Vec3& a, const Vec3& b, const Vec3& x);

}  // namespace relpose
