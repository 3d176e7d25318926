#pragma once

#include <array>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace relpose {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Numerical tolerances shared by the geometry layer. Callers that need
// different limits pass their own instance.
struct GeometryTolerances {
  double algebra = 1e-12;     // orthonormality, unit norms
  double constraint = 1e-10;  // residuals of exact constraints
  double parallel = 1e-9;     // cross-product magnitude for (near) parallelism
};

inline constexpr GeometryTolerances kTolerances{};

// Relative pose of camera 2 w.r.t. camera 1: X2 = R * X1 + t with |t| = 1.
// A pure rotation keeps the reserved translation (1, 0, 0) and sets the flag.
struct RelativePose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::UnitX();
  bool pure_rotation = false;

  RelativePose() = default;
  RelativePose(const Mat3& R, const Vec3& t) : rotation(R), translation(t.normalized()) {}

  bool is_valid(double tol = 1e-9) const;
};

// Calibrated point correspondence on the normalized image plane (z == 1).
struct PointMatch {
  Vec3 p = Vec3::UnitZ();
  Vec3 p_prime = Vec3::UnitZ();

  PointMatch() = default;
  PointMatch(const Vec3& a, const Vec3& b) : p(a), p_prime(b) {}
  static PointMatch from_2d(const Vec2& a, const Vec2& b) {
    return {a.homogeneous(), b.homogeneous()};
  }
};

// Calibrated line correspondence. The homogeneous line is scaled so that its
// first two components have unit norm; endpoints are kept for segment tests
// (junction spans, vanishing point distances, orientation).
struct LineMatch {
  Vec3 l = Vec3::UnitZ();
  Vec3 l_prime = Vec3::UnitZ();
  std::array<Vec3, 2> endpoints{Vec3::UnitZ(), Vec3::UnitZ()};
  std::array<Vec3, 2> endpoints_prime{Vec3::UnitZ(), Vec3::UnitZ()};

  // Builds the line from calibrated endpoints a -> b (image 1), a2 -> b2 (image 2).
  static LineMatch from_endpoints(const Vec2& a, const Vec2& b, const Vec2& a2, const Vec2& b2);
};

// Normalizes a homogeneous line so that (l1, l2) has unit norm.
Vec3 normalize_line(const Vec3& l);

// Vanishing point correspondence. When both images are oriented, the pair
// satisfies v' = +R v; otherwise the sign is ambiguous.
struct VPMatch {
  Vec3 v = Vec3::UnitZ();
  Vec3 v_prime = Vec3::UnitZ();
  std::vector<int> supporting_lines;
  std::array<bool, 2> oriented{false, false};

  bool has_sign_hint() const { return oriented[0] && oriented[1]; }
};

struct CameraIntrinsics {
  double fx = 1000.0;
  double fy = 1000.0;
  double cx = 0.0;
  double cy = 0.0;
  double skew = 0.0;

  Mat3 matrix() const;
  // Empty when the matrix is not invertible (non-positive focal lengths).
  std::optional<Mat3> inverse() const;
  Vec2 to_pixel(const Vec3& calibrated) const;
  Vec3 to_calibrated(const Vec2& pixel) const;
  double mean_focal() const { return 0.5 * (fx + fy); }
};

}  // namespace relpose
