#pragma once

#include <optional>

#include "relpose/types.h"

namespace relpose {

Mat3 skew(const Vec3& v);

// Angle in [0, pi] between two (not necessarily unit) vectors.
double angle_between(const Vec3& a, const Vec3& b);

// Rotation angle in [0, pi], accurate for small angles.
double rotation_angle(const Mat3& R);

// Axis-angle to rotation matrix.
Mat3 rotation_from_axis_angle(const Vec3& axis_angle);

// Nearest rotation in Frobenius norm.
Mat3 project_to_rotation(const Mat3& M);

// E = [t]x R.
Mat3 essential_from_pose(const RelativePose& pose);

// Signed Sampson residual p'^T E p / |grad|.
double sampson_signed(const Mat3& E, const Vec3& p, const Vec3& p_prime);

// Sampson distance of the match w.r.t. E(pose), in calibrated units.
double epipolar_residual(const RelativePose& pose, const PointMatch& m);

// min(angle(v', R v), angle(v', -R v)), in [0, pi/2].
double vp_rotation_residual(const RelativePose& pose, const VPMatch& vm);

// Rotation R_x with R_x * x = (0, 1, 0). Uses the Rodrigues formula around
// x cross e_y; x = -e_y maps to the rotation by pi about the z-axis.
Mat3 rotation_to_axis(const Vec3& x);

// True when x is (anti)parallel to the y-axis, where the rotation axis of
// rotation_to_axis is undefined and a fixed convention is returned.
bool is_axis_degenerate(const Vec3& x, double tol = kTolerances.algebra);

struct PoseError {
  double rotation = 0.0;     // radians
  double translation = 0.0;  // radians, signed directions
};

PoseError pose_errors(const RelativePose& estimated, const RelativePose& truth);

// Intersection of the two line pairs in both images. Empty when the lines are
// (near) parallel in either image: |z of l_a x l_b| < parallel_tol.
std::optional<PointMatch> line_line_junction(const LineMatch& a, const LineMatch& b,
                                             double parallel_tol = kTolerances.parallel);

// Determinant of the four back-projected planes of two line matches, each
// plane scaled to a unit normal, divided by the sines of the angles between
// the two planes of each line. It vanishes exactly when the two 3D lines
// implied by the pose are coplanar; otherwise its magnitude is the distance
// between the lines times the sine of their angle. Zero when a line cannot
// be triangulated.
double coplanarity_determinant(const RelativePose& pose, const LineMatch& a, const LineMatch& b);

// Two-view midpoint triangulation depths (lambda1, lambda2) with
// lambda2 * p' = lambda1 * R p + t. Empty for rays parallel within tolerance.
std::optional<Eigen::Vector2d> triangulate_depths(const RelativePose& pose, const PointMatch& m);

// Positive depth in both views.
bool is_in_front(const RelativePose& pose, const PointMatch& m);

}  // namespace relpose
