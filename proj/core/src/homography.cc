#include <cmath>

#include <Eigen/SVD>

#include "relpose/geometry.h"
#include "relpose/solvers.h"

namespace relpose {
namespace {

// Rows of the cross product a x (M h), where M h is linear in the row-major
// entries h of H and given by its 3x9 coefficient matrix.
Eigen::Matrix<double, 3, 9> cross_rows(const Vec3& a, const Eigen::Matrix<double, 3, 9>& M) {
  Eigen::Matrix<double, 3, 9> out;
  out.row(0) = a.y() * M.row(2) - a.z() * M.row(1);
  out.row(1) = a.z() * M.row(0) - a.x() * M.row(2);
  out.row(2) = a.x() * M.row(1) - a.y() * M.row(0);
  return out;
}

}  // namespace

std::optional<Mat3> estimate_homography(std::span<const PointMatch> points,
                                        std::span<const LineMatch> lines) {
  const int n = static_cast<int>(points.size() + lines.size());
  if (n < 4) return std::nullopt;
  Eigen::MatrixXd A(3 * n, 9);
  int row = 0;
  for (const auto& m : points) {
    // H p as a function of h.
    Eigen::Matrix<double, 3, 9> Hp = Eigen::Matrix<double, 3, 9>::Zero();
    for (int i = 0; i < 3; ++i) Hp.block<1, 3>(i, 3 * i) = m.p.transpose();
    A.middleRows<3>(row) = cross_rows(m.p_prime, Hp);
    row += 3;
  }
  for (const auto& m : lines) {
    // H^T l' as a function of h: (H^T l')_j = sum_i l'_i H_ij.
    const Vec3 l = m.l.normalized();
    const Vec3 l2 = m.l_prime.normalized();
    Eigen::Matrix<double, 3, 9> Htl = Eigen::Matrix<double, 3, 9>::Zero();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) Htl(j, 3 * i + j) = l2(i);
    A.middleRows<3>(row) = cross_rows(l, Htl);
    row += 3;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(7) > 1e-9 * sv(0))) return std::nullopt;
  const Eigen::Matrix<double, 9, 1> h = svd.matrixV().col(8);
  Mat3 H;
  H << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  return H;
}

std::vector<HomographyDecomposition> decompose_homography(const Mat3& H_in) {
  Eigen::JacobiSVD<Mat3> svd(H_in, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 s = svd.singularValues();
  const Mat3 H = H_in / s(1);
  const double s1 = s(0) / s(1), s3 = s(2) / s(1);
  Mat3 V = svd.matrixV();
  if (V.determinant() < 0.0) V *= -1.0;

  std::vector<HomographyDecomposition> out;
  if (s1 - s3 < kTolerances.constraint) {
    if (H.determinant() > 0.0) out.push_back({project_to_rotation(H), Vec3::Zero(), Vec3::UnitZ()});
    return out;
  }

  const Vec3 v1 = V.col(0), v2 = V.col(1), v3 = V.col(2);
  const double a = std::sqrt(std::max(0.0, 1.0 - s3 * s3));
  const double b = std::sqrt(std::max(0.0, s1 * s1 - 1.0));
  const double c = std::sqrt(s1 * s1 - s3 * s3);
  const Vec3 u1 = (a * v1 + b * v3) / c;
  const Vec3 u2 = (a * v1 - b * v3) / c;

  for (const Vec3& u : {u1, u2}) {
    Mat3 U, W;
    const Vec3 n = v2.cross(u);
    U << v2, u, n;
    const Vec3 Hv2 = H * v2, Hu = H * u;
    W << Hv2, Hu, Hv2.cross(Hu);
    const Mat3 R = W * U.transpose();
    const Vec3 t = (H - R) * n;
    out.push_back({project_to_rotation(R), t, n.normalized()});
  }
  return out;
}

SolverResult solve_homography_family(std::span<const PointMatch> points,
                                     std::span<const LineMatch> lines,
                                     const SolverOptions& opts) {
  (void)opts;
  static constexpr std::array<SolverKind, 5> kKinds = {SolverKind::L4H, SolverKind::P1L3H,
                                                       SolverKind::P2L2H, SolverKind::P3L1H,
                                                       SolverKind::P4H};
  SolverResult result;
  if (points.size() + lines.size() != 4) {
    result.status = SolverStatus::kInvalidInput;
    return result;
  }
  result.solver = kKinds[points.size()];
  // Two points and two lines of one plane give constraints of rank 7 at most;
  // with noise the DLT would return an H fixed by the noise alone.
  if (points.size() == 2) {
    result.status = SolverStatus::kDegenerateSample;
    return result;
  }

  const auto H = estimate_homography(points, lines);
  if (!H) {
    result.status = SolverStatus::kDegenerateSample;
    return result;
  }
  // The DLT fixes H only up to sign, and the sign is not observable from line
  // constraints. Both signs are decomposed; each yields at most two rotations.
  for (double sign : {1.0, -1.0}) {
    for (const auto& d : decompose_homography(sign * *H)) {
      if (d.translation.norm() == 0.0) {
        RelativePose pose;
        pose.rotation = d.rotation;
        pose.pure_rotation = true;
        result.candidates.push_back(pose);
      } else {
        result.candidates.emplace_back(d.rotation, d.translation);
      }
    }
  }
  if (result.candidates.empty()) result.status = SolverStatus::kDegenerateSample;
  return result;
}

}  // namespace relpose
