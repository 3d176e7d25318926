#include <array>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "relpose/geometry.h"
#include "relpose/solvers.h"

namespace relpose {
namespace {

// Monomials in (x, y, z) up to degree 3, graded so that the ten cubic terms
// come first: x^3 x^2y x^2z xy^2 xyz xz^2 y^3 y^2z yz^2 z^3 | x^2 xy xz y^2 yz
// z^2 | x y z | 1. Degree-2 polynomials use the trailing ten entries, degree-1
// polynomials the coefficients of (x, y, z, 1).
using Poly1 = std::array<double, 4>;
using Poly2 = std::array<double, 10>;
using Poly3 = std::array<double, 20>;

struct Exponent {
  int a, b, c;
};

constexpr std::array<Exponent, 20> kMonomials = {{
    {3, 0, 0}, {2, 1, 0}, {2, 0, 1}, {1, 2, 0}, {1, 1, 1}, {1, 0, 2}, {0, 3, 0},
    {0, 2, 1}, {0, 1, 2}, {0, 0, 3}, {2, 0, 0}, {1, 1, 0}, {1, 0, 1}, {0, 2, 0},
    {0, 1, 1}, {0, 0, 2}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0, 0, 0},
}};

constexpr int monomial_index(int a, int b, int c) {
  for (int i = 0; i < 20; ++i) {
    if (kMonomials[i].a == a && kMonomials[i].b == b && kMonomials[i].c == c) return i;
  }
  return -1;
}

// Product tables: degree-1 x degree-1 into Poly2 slots, degree-2 x degree-1
// into Poly3 slots.
struct ProductTables {
  std::array<std::array<int, 4>, 4> p11{};
  std::array<std::array<int, 4>, 10> p21{};
};

constexpr ProductTables make_tables() {
  ProductTables t{};
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const Exponent& u = kMonomials[16 + i];
      const Exponent& v = kMonomials[16 + j];
      t.p11[i][j] = monomial_index(u.a + v.a, u.b + v.b, u.c + v.c) - 10;
    }
  }
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 4; ++j) {
      const Exponent& u = kMonomials[10 + i];
      const Exponent& v = kMonomials[16 + j];
      t.p21[i][j] = monomial_index(u.a + v.a, u.b + v.b, u.c + v.c);
    }
  }
  return t;
}

constexpr ProductTables kTables = make_tables();

Poly2 mul(const Poly1& u, const Poly1& v) {
  Poly2 r{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) r[kTables.p11[i][j]] += u[i] * v[j];
  return r;
}

Poly3 mul(const Poly2& u, const Poly1& v) {
  Poly3 r{};
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 4; ++j) r[kTables.p21[i][j]] += u[i] * v[j];
  return r;
}

template <typename P>
void axpy(double alpha, const P& x, P& y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

// Ten cubic constraints on E = x E0 + y E1 + z E2 + E3: det(E) = 0 and the
// nine entries of 2 E E^T E - trace(E E^T) E = 0.
Eigen::Matrix<double, 10, 20> constraint_matrix(const std::array<Mat3, 4>& basis) {
  std::array<std::array<Poly1, 3>, 3> E;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      for (int k = 0; k < 4; ++k) E[r][c][k] = basis[k](r, c);

  Eigen::Matrix<double, 10, 20> M;

  // det(E), expanded along the first row.
  Poly3 det{};
  {
    Poly2 c0 = mul(E[1][1], E[2][2]);
    axpy(-1.0, mul(E[1][2], E[2][1]), c0);
    Poly2 c1 = mul(E[1][2], E[2][0]);
    axpy(-1.0, mul(E[1][0], E[2][2]), c1);
    Poly2 c2 = mul(E[1][0], E[2][1]);
    axpy(-1.0, mul(E[1][1], E[2][0]), c2);
    det = mul(c0, E[0][0]);
    axpy(1.0, mul(c1, E[0][1]), det);
    axpy(1.0, mul(c2, E[0][2]), det);
  }
  for (int i = 0; i < 20; ++i) M(0, i) = det[i];

  std::array<std::array<Poly2, 3>, 3> EEt{};
  for (int i = 0; i < 3; ++i) {
    for (int j = i; j < 3; ++j) {
      Poly2 s{};
      for (int k = 0; k < 3; ++k) axpy(1.0, mul(E[i][k], E[j][k]), s);
      EEt[i][j] = s;
      EEt[j][i] = s;
    }
  }
  Poly2 trace{};
  for (int i = 0; i < 3; ++i) axpy(1.0, EEt[i][i], trace);

  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      Poly3 e{};
      for (int k = 0; k < 3; ++k) axpy(2.0, mul(EEt[i][k], E[k][j]), e);
      axpy(-1.0, mul(trace, E[i][j]), e);
      for (int m = 0; m < 20; ++m) M(1 + 3 * i + j, m) = e[m];
    }
  }
  return M;
}

// Picks the member of the twisted pair (and the sign of t) that puts the most
// sample points in front of both cameras.
RelativePose pose_from_essential(const Mat3& E, std::span<const PointMatch> points) {
  Eigen::JacobiSVD<Mat3> svd(E, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 U = svd.matrixU();
  Mat3 V = svd.matrixV();
  if (U.determinant() < 0.0) U.col(2) *= -1.0;
  if (V.determinant() < 0.0) V.col(2) *= -1.0;
  Mat3 W;
  W << 0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0;
  const Vec3 t = U.col(2);
  const std::array<RelativePose, 4> options = {
      RelativePose(U * W * V.transpose(), t), RelativePose(U * W * V.transpose(), -t),
      RelativePose(U * W.transpose() * V.transpose(), t),
      RelativePose(U * W.transpose() * V.transpose(), -t)};
  int best = 0, best_count = -1;
  for (int k = 0; k < 4; ++k) {
    int count = 0;
    for (const auto& m : points) count += is_in_front(options[k], m) ? 1 : 0;
    if (count > best_count) {
      best_count = count;
      best = k;
    }
  }
  return options[best];
}

}  // namespace

SolverResult solve_5pc(std::span<const PointMatch> points, const SolverOptions& opts) {
  SolverResult result;
  result.solver = SolverKind::P5;
  if (points.size() != 5) {
    result.status = SolverStatus::kInvalidInput;
    return result;
  }

  // Padded with zero rows to a square system; the four trailing right
  // singular vectors span the null space.
  Eigen::Matrix<double, 9, 9> Q = Eigen::Matrix<double, 9, 9>::Zero();
  for (int i = 0; i < 5; ++i) {
    const Vec3& p = points[i].p;
    const Vec3& q = points[i].p_prime;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) Q(i, 3 * r + c) = q(r) * p(c);
  }
  Eigen::JacobiSVD<Eigen::Matrix<double, 9, 9>> svd(Q, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(4) > 1e-9 * sv(0))) {
    result.status = SolverStatus::kDegenerateSample;
    return result;
  }

  std::array<Mat3, 4> basis;
  for (int k = 0; k < 4; ++k) {
    const Eigen::Matrix<double, 9, 1> n = svd.matrixV().col(5 + k);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) basis[k](r, c) = n(3 * r + c);
  }

  const Eigen::Matrix<double, 10, 20> M = constraint_matrix(basis);
  Eigen::FullPivLU<Eigen::Matrix<double, 10, 10>> lu(M.leftCols<10>());
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) {
    result.status = SolverStatus::kDegenerateSample;
    return result;
  }
  const Eigen::Matrix<double, 10, 10> B = lu.solve(M.rightCols<10>());

  // Multiplication by x on the basis (x^2 xy xz y^2 yz z^2 x y z 1).
  Eigen::Matrix<double, 10, 10> action = Eigen::Matrix<double, 10, 10>::Zero();
  action.topRows<6>() = -B.topRows<6>();
  action(6, 0) = 1.0;
  action(7, 1) = 1.0;
  action(8, 2) = 1.0;
  action(9, 6) = 1.0;

  Eigen::EigenSolver<Eigen::Matrix<double, 10, 10>> eig(action);
  if (eig.info() != Eigen::Success) {
    result.status = SolverStatus::kDegenerateSample;
    return result;
  }
  for (int i = 0; i < 10; ++i) {
    const auto lambda = eig.eigenvalues()(i);
    if (std::abs(lambda.imag()) > opts.imag_tolerance * std::max(1.0, std::abs(lambda.real()))) {
      continue;
    }
    const Eigen::Matrix<double, 10, 1> v = eig.eigenvectors().col(i).real();
    if (std::abs(v(9)) < 1e-14 * v.norm()) continue;
    const double x = v(6) / v(9), y = v(7) / v(9), z = v(8) / v(9);
    const Mat3 E = x * basis[0] + y * basis[1] + z * basis[2] + basis[3];
    if (!E.allFinite()) continue;
    result.candidates.push_back(pose_from_essential(E / E.norm(), points));
  }
  if (result.candidates.empty()) result.status = SolverStatus::kNoRealRoot;
  return result;
}

}  // namespace relpose
