#include "relpose/geometry.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Geometry>
#include <Eigen/SVD>

namespace relpose {

bool RelativePose::is_valid(double tol) const {
  const Mat3 should_be_identity = rotation.transpose() * rotation;
  return (should_be_identity - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(rotation.determinant() - 1.0) <= tol &&
         std::abs(translation.norm() - 1.0) <= tol;
}

Vec3 normalize_line(const Vec3& l) {
  const double n = l.head<2>().norm();
  return n > 0.0 ? Vec3(l / n) : l;
}

LineMatch LineMatch::from_endpoints(const Vec2& a, const Vec2& b, const Vec2& a2,
                                    const Vec2& b2) {
  LineMatch m;
  m.endpoints = {a.homogeneous(), b.homogeneous()};
  m.endpoints_prime = {a2.homogeneous(), b2.homogeneous()};
  m.l = normalize_line(m.endpoints[0].cross(m.endpoints[1]));
  m.l_prime = normalize_line(m.endpoints_prime[0].cross(m.endpoints_prime[1]));
  return m;
}

Mat3 CameraIntrinsics::matrix() const {
  Mat3 K;
  K << fx, skew, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return K;
}

std::optional<Mat3> CameraIntrinsics::inverse() const {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy)) {
    return std::nullopt;
  }
  return matrix().inverse();
}

Vec2 CameraIntrinsics::to_pixel(const Vec3& calibrated) const {
  const Vec3 h = matrix() * calibrated;
  return h.hnormalized();
}

Vec3 CameraIntrinsics::to_calibrated(const Vec2& pixel) const {
  const double y = (pixel.y() - cy) / fy;
  const double x = (pixel.x() - cx - skew * y) / fx;
  return {x, y, 1.0};
}

Mat3 skew(const Vec3& v) {
  Mat3 S;
  S << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return S;
}

double angle_between(const Vec3& a, const Vec3& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

double rotation_angle(const Mat3& R) {
  const Vec3 w(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  return std::atan2(0.5 * w.norm(), 0.5 * (R.trace() - 1.0));
}

Mat3 rotation_from_axis_angle(const Vec3& axis_angle) {
  const double angle = axis_angle.norm();
  if (angle == 0.0) return Mat3::Identity();
  return Eigen::AngleAxisd(angle, axis_angle / angle).toRotationMatrix();
}

Mat3 project_to_rotation(const Mat3& M) {
  Eigen::JacobiSVD<Mat3> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 D = Mat3::Identity();
  D(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return svd.matrixU() * D * svd.matrixV().transpose();
}

Mat3 essential_from_pose(const RelativePose& pose) {
  return skew(pose.translation) * pose.rotation;
}

double sampson_signed(const Mat3& E, const Vec3& p, const Vec3& p_prime) {
  const Vec3 Ep = E * p;
  const Vec3 Etq = E.transpose() * p_prime;
  const double num = p_prime.dot(Ep);
  const double den2 = Ep.head<2>().squaredNorm() + Etq.head<2>().squaredNorm();
  if (den2 <= 0.0) return num == 0.0 ? 0.0 : std::copysign(INFINITY, num);
  return num / std::sqrt(den2);
}

double epipolar_residual(const RelativePose& pose, const PointMatch& m) {
  // Sampson is defined for points on the z = 1 plane.
  return std::abs(sampson_signed(essential_from_pose(pose), m.p / m.p.z(),
                                 m.p_prime / m.p_prime.z()));
}

double vp_rotation_residual(const RelativePose& pose, const VPMatch& vm) {
  const Vec3 rv = pose.rotation * vm.v;
  const double a = angle_between(vm.v_prime, rv);
  return std::min(a, std::numbers::pi - a);
}

bool is_axis_degenerate(const Vec3& x, double tol) {
  return Vec3(x.z(), 0.0, -x.x()).norm() <= tol * x.norm();
}

namespace {

// Rodrigues rotation taking unit x to e_y for x not close to -e_y:
// R = I + [k]x + [k]x^2 / (1 + c), k = x cross e_y, c = x . e_y.
Mat3 rotate_onto_y(const Vec3& x) {
  const Vec3 k(-x.z(), 0.0, x.x());
  const double c = x.y();
  const Mat3 K = skew(k);
  return Mat3::Identity() + K + K * K / (1.0 + c);
}

}  // namespace

Mat3 rotation_to_axis(const Vec3& x_in) {
  const Vec3 x = x_in.normalized();
  if (x.y() >= 0.0) return rotate_onto_y(x);
  // Southern hemisphere: flip through the rotation by pi about z first so the
  // Rodrigues denominator stays away from zero.
  Mat3 Rz_pi = Mat3::Identity();
  Rz_pi(0, 0) = -1.0;
  Rz_pi(1, 1) = -1.0;
  return rotate_onto_y(Rz_pi * x) * Rz_pi;
}

PoseError pose_errors(const RelativePose& estimated, const RelativePose& truth) {
  return {rotation_angle(estimated.rotation.transpose() * truth.rotation),
          angle_between(estimated.translation, truth.translation)};
}

std::optional<PointMatch> line_line_junction(const LineMatch& a, const LineMatch& b,
                                             double parallel_tol) {
  const Vec3 la = a.l.normalized(), lb = b.l.normalized();
  const Vec3 la2 = a.l_prime.normalized(), lb2 = b.l_prime.normalized();
  const Vec3 x = la.cross(lb);
  const Vec3 x2 = la2.cross(lb2);
  if (std::abs(x.z()) < parallel_tol || std::abs(x2.z()) < parallel_tol) return std::nullopt;
  return PointMatch(x / x.z(), x2 / x2.z());
}

double coplanarity_determinant(const RelativePose& pose, const LineMatch& a, const LineMatch& b) {
  // Camera 1 planes pass through the origin; a camera 2 line l' back-projects
  // to (R^T l')^T X + l'^T t = 0.
  auto plane1 = [](const Vec3& l) -> Eigen::Vector4d {
    return Eigen::Vector4d(l.x(), l.y(), l.z(), 0.0) / l.norm();
  };
  auto plane2 = [&](const Vec3& l) -> Eigen::Vector4d {
    const Vec3 n = pose.rotation.transpose() * l;
    return Eigen::Vector4d(n.x(), n.y(), n.z(), l.dot(pose.translation)) / n.norm();
  };
  const Eigen::Vector4d pa = plane1(a.l), pa2 = plane2(a.l_prime);
  const Eigen::Vector4d pb = plane1(b.l), pb2 = plane2(b.l_prime);
  const double sa = pa.head<3>().cross(pa2.head<3>()).norm();
  const double sb = pb.head<3>().cross(pb2.head<3>()).norm();
  if (sa == 0.0 || sb == 0.0) return 0.0;
  Eigen::Matrix4d A;
  A << pa, pa2, pb, pb2;
  return A.determinant() / (sa * sb);
}

std::optional<Eigen::Vector2d> triangulate_depths(const RelativePose& pose, const PointMatch& m) {
  const Vec3 a = pose.rotation * m.p;
  const Vec3& b = m.p_prime;
  const Vec3& t = pose.translation;
  const double aa = a.dot(a), bb = b.dot(b), ab = a.dot(b);
  const double det = aa * bb - ab * ab;
  if (det <= 1e-14 * aa * bb) return std::nullopt;
  // Normal equations of lambda1 * a - lambda2 * b = -t.
  const double ra = -a.dot(t), rb = b.dot(t);
  const double lambda1 = (bb * ra + ab * rb) / det;
  const double lambda2 = (ab * ra + aa * rb) / det;
  return Eigen::Vector2d(lambda1, lambda2);
}

bool is_in_front(const RelativePose& pose, const PointMatch& m) {
  const auto depths = triangulate_depths(pose, m);
  return depths && (*depths)(0) > 0.0 && (*depths)(1) > 0.0;
}

}  // namespace relpose
