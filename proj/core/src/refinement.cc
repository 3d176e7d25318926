#include "relpose/refinement.h"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include "relpose/geometry.h"

namespace relpose {

Eigen::Matrix<double, 3, 2> translation_basis(const Vec3& t) {
  const Vec3 u = t.normalized();
  int k = 0;
  u.cwiseAbs().minCoeff(&k);
  const Vec3 b1 = u.cross(Vec3::Unit(k)).normalized();
  Eigen::Matrix<double, 3, 2> B;
  B << b1, u.cross(b1);
  return B;
}

RelativePose retract(const RelativePose& pose, const PoseDelta& delta) {
  RelativePose out;
  out.rotation = pose.rotation * rotation_from_axis_angle(delta.head<3>());
  out.translation = (pose.translation + translation_basis(pose.translation) * delta.tail<2>())
                        .normalized();
  return out;
}

std::vector<double> vp_signs(const RelativePose& pose, std::span<const VPMatch> vps) {
  std::vector<double> s;
  s.reserve(vps.size());
  for (const auto& vm : vps) s.push_back(vm.v_prime.dot(pose.rotation * vm.v) >= 0.0 ? 1.0 : -1.0);
  return s;
}

void pose_residuals(const RelativePose& pose, std::span<const PointMatch> points,
                    std::span<const VPMatch> vps, std::span<const double> signs,
                    const RefineOptions& opts, Eigen::VectorXd& residuals,
                    Eigen::MatrixXd* jacobian) {
  const int np = static_cast<int>(points.size());
  const int nv = static_cast<int>(vps.size());
  residuals.resize(np + 3 * nv);
  if (jacobian) jacobian->setZero(np + 3 * nv, 5);

  const Mat3& R = pose.rotation;
  const Vec3& t = pose.translation;
  const Mat3 E = skew(t) * R;

  // Derivatives of E along the five chart directions.
  std::array<Mat3, 5> dE;
  if (jacobian) {
    const Eigen::Matrix<double, 3, 2> B = translation_basis(t);
    for (int k = 0; k < 3; ++k) dE[k] = skew(t) * R * skew(Vec3::Unit(k));
    for (int j = 0; j < 2; ++j) dE[3 + j] = skew(B.col(j)) * R;
  }

  for (int i = 0; i < np; ++i) {
    const Vec3& p = points[i].p;
    const Vec3& q = points[i].p_prime;
    const Vec3 Ep = E * p;
    const Vec3 Etq = E.transpose() * q;
    const double n = q.dot(Ep);
    const double d = Ep.head<2>().squaredNorm() + Etq.head<2>().squaredNorm();
    const double sd = std::sqrt(d);
    const double r = d > 0.0 ? n / sd : 0.0;
    if (std::abs(r) > opts.point_threshold) {
      residuals(i) = std::copysign(opts.point_threshold, r);
      continue;
    }
    residuals(i) = r;
    if (!jacobian || d <= 0.0) continue;
    // dr/dE = q p^T / sqrt(d) - n / (2 d^{3/2}) dd/dE.
    Vec3 a(Ep.x(), Ep.y(), 0.0), b(Etq.x(), Etq.y(), 0.0);
    const Mat3 G = q * p.transpose() / sd - (n / (d * sd)) * (a * p.transpose() + q * b.transpose());
    for (int k = 0; k < 5; ++k) (*jacobian)(i, k) = (G.array() * dE[k].array()).sum();
  }

  const double w = std::sqrt(opts.vp_weight);
  for (int j = 0; j < nv; ++j) {
    const Vec3 v = vps[j].v.normalized();
    const Vec3 v2 = vps[j].v_prime.normalized();
    const double s = signs[j];
    residuals.segment<3>(np + 3 * j) = w * v2.cross(s * (R * v));
    if (!jacobian) continue;
    for (int k = 0; k < 3; ++k) {
      const Vec3 dRv = R * Vec3::Unit(k).cross(v);
      jacobian->block<3, 1>(np + 3 * j, k) = w * s * v2.cross(dRv);
    }
  }
}

double refine_cost(const RelativePose& pose, std::span<const PointMatch> points,
                   std::span<const VPMatch> vps, std::span<const double> signs,
                   const RefineOptions& opts) {
  Eigen::VectorXd r;
  pose_residuals(pose, points, vps, signs, opts, r, nullptr);
  return r.squaredNorm();
}

Vec3 translation_given_rotation(const Mat3& R, std::span<const PointMatch> points,
                                const Vec3& hint) {
  if (points.size() < 2) return hint.normalized();
  Eigen::MatrixXd A(points.size(), 3);
  for (std::size_t i = 0; i < points.size(); ++i) {
    A.row(i) = (R * points[i].p).cross(points[i].p_prime).normalized().transpose();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  Vec3 t = svd.matrixV().col(2);
  return t.dot(hint) < 0.0 ? -t : t;
}

RelativePose refine_pose(const RelativePose& pose, std::span<const PointMatch> points,
                         std::span<const VPMatch> vps, const RefineOptions& opts,
                         RefineSummary* summary) {
  const std::vector<double> signs = vp_signs(pose, vps);
  RelativePose current = pose;
  current.pure_rotation = false;
  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  pose_residuals(current, points, vps, signs, opts, r, &J);
  double cost = r.squaredNorm();
  const double initial = cost;
  double lambda = opts.initial_lambda;
  int iter = 0, accepted = 0;
  bool converged = false;

  for (; !converged && iter < opts.max_iterations && cost > 0.0; ++iter) {
    const Eigen::Matrix<double, 5, 5> JtJ = J.transpose() * J;
    const PoseDelta g = J.transpose() * r;
    if (g.lpNorm<Eigen::Infinity>() < 1e-16) break;
    bool stepped = false;
    while (lambda < 1e16) {
      Eigen::Matrix<double, 5, 5> A = JtJ;
      A.diagonal() += lambda * JtJ.diagonal().cwiseMax(1e-12);
      const PoseDelta delta = -A.ldlt().solve(g);
      const RelativePose candidate = retract(current, delta);
      const double c = refine_cost(candidate, points, vps, signs, opts);
      if (std::isfinite(c) && c < cost) {
        const double decrease = cost - c;
        current = candidate;
        cost = c;
        lambda = std::max(lambda * 0.1, 1e-12);
        ++accepted;
        stepped = true;
        pose_residuals(current, points, vps, signs, opts, r, &J);
        converged = decrease <= opts.function_tolerance * initial || delta.norm() < 1e-15;
        break;
      }
      lambda *= 10.0;
    }
    if (!stepped) break;
  }

  if (summary) *summary = {initial, cost, iter, accepted};
  if (!(cost < initial)) return pose;
  return current;
}

}  // namespace relpose
