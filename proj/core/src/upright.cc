#include <algorithm>
#include <cmath>
#include <numbers>

#include "relpose/geometry.h"
#include "relpose/polynomial.h"
#include "relpose/solvers.h"

namespace relpose {

Mat3 rotation_about_y(double phi) {
  const double c = std::cos(phi), s = std::sin(phi);
  Mat3 R;
  R << c, 0.0, -s, 0.0, 1.0, 0.0, s, 0.0, c;
  return R;
}

namespace {

using Quad = std::array<Vec3, 3>;  // a + s b + s^2 c, one vector per power

// ((1 + s^2) R_y(phi(s)) q) x q' with s = tan(phi / 2).
Quad row_polynomial(const Vec3& q, const Vec3& q_prime) {
  // (1 + s^2) R_y = I + s [[0,0,-2],[0,0,0],[2,0,0]] + s^2 diag(-1, 1, -1).
  const Vec3 r0 = q;
  const Vec3 r1(-2.0 * q.z(), 0.0, 2.0 * q.x());
  const Vec3 r2(-q.x(), q.y(), -q.z());
  return {r0.cross(q_prime), r1.cross(q_prime), r2.cross(q_prime)};
}

double det_at(const UprightProblem& pr, double phi) {
  const Mat3 Ry = rotation_about_y(phi);
  Mat3 M;
  for (int i = 0; i < 3; ++i) M.row(i) = (Ry * pr.q[i]).cross(pr.q_prime[i]).transpose();
  return M.determinant();
}

double det_derivative_at(const UprightProblem& pr, double phi) {
  const Mat3 Ry = rotation_about_y(phi);
  Mat3 dRy;
  dRy << -std::sin(phi), 0.0, -std::cos(phi), 0.0, 0.0, 0.0, std::cos(phi), 0.0, -std::sin(phi);
  Mat3 M, D;
  for (int i = 0; i < 3; ++i) {
    M.row(i) = (Ry * pr.q[i]).cross(pr.q_prime[i]).transpose();
    D.row(i) = (dRy * pr.q[i]).cross(pr.q_prime[i]).transpose();
  }
  double total = 0.0;
  for (int i = 0; i < 3; ++i) {
    Mat3 Mi = M;
    Mi.row(i) = D.row(i);
    total += Mi.determinant();
  }
  return total;
}

double polish_yaw(const UprightProblem& pr, double phi) {
  double best = phi, best_f = std::abs(det_at(pr, phi));
  for (int iter = 0; iter < 4; ++iter) {
    const double d = det_derivative_at(pr, phi);
    if (d == 0.0) break;
    phi -= det_at(pr, phi) / d;
    const double f = std::abs(det_at(pr, phi));
    if (!(f < best_f)) break;
    best = phi;
    best_f = f;
  }
  return best;
}

// Unit null vector of the three constraint rows.
Vec3 translation_for_yaw(const UprightProblem& pr, double phi) {
  const Mat3 Ry = rotation_about_y(phi);
  std::array<Vec3, 3> m;
  for (int i = 0; i < 3; ++i) m[i] = (Ry * pr.q[i]).cross(pr.q_prime[i]);
  Vec3 best = m[0].cross(m[1]);
  for (const Vec3& c : {m[0].cross(m[2]), m[1].cross(m[2])}) {
    if (c.squaredNorm() > best.squaredNorm()) best = c;
  }
  return best.normalized();
}

}  // namespace

std::vector<UprightSolution> solve_upright_3pt(const UprightProblem& problem,
                                               const SolverOptions& opts) {
  std::array<Quad, 3> rows;
  for (int i = 0; i < 3; ++i) rows[i] = row_polynomial(problem.q[i], problem.q_prime[i]);

  // det [m1; m2; m3] = m1 . (m2 x m3), a sextic in s.
  std::array<Vec3, 5> cross{};
  for (auto& c : cross) c.setZero();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) cross[i + j] += rows[1][i].cross(rows[2][j]);
  std::array<double, 7> sextic{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 5; ++j) sextic[i + j] += rows[0][i].dot(cross[j]);

  // The sextic carries the factor (1 + s^2); divide it out from both ends and
  // average the middle coefficient.
  std::array<double, 5> quartic{};
  quartic[4] = sextic[6];
  quartic[3] = sextic[5];
  quartic[0] = sextic[0];
  quartic[1] = sextic[1];
  quartic[2] = 0.5 * ((sextic[4] - quartic[4]) + (sextic[2] - quartic[0]));

  double scale = 0.0;
  for (double c : quartic) scale = std::max(scale, std::abs(c));
  std::vector<double> yaws;
  if (scale == 0.0) return {};
  for (double s : real_roots(quartic, opts.imag_tolerance)) yaws.push_back(2.0 * std::atan(s));
  // A vanishing leading coefficient means a root at s = infinity, phi = pi.
  if (std::abs(quartic[4]) <= 1e-12 * scale) yaws.push_back(std::numbers::pi);

  std::vector<UprightSolution> out;
  for (double phi : yaws) {
    phi = polish_yaw(problem, phi);
    const Vec3 t = translation_for_yaw(problem, phi);
    if (!t.allFinite()) continue;
    out.push_back({phi, t});
    if (static_cast<int>(out.size()) == kMaxUprightSolutions) break;
  }
  return out;
}

SolverResult solve_3_0_1(std::span<const PointMatch> points, const VPMatch& vp,
                         const SolverOptions& opts) {
  SolverResult result;
  result.solver = SolverKind::P3V1;
  if (points.size() != 3) {
    result.status = SolverStatus::kInvalidInput;
    return result;
  }
  const Mat3 Rx = rotation_to_axis(vp.v);
  UprightProblem problem;
  problem.rx = Rx;
  for (int i = 0; i < 3; ++i) problem.q[i] = Rx * points[i].p;

  // v' = R v or v' = -R v; an oriented pair fixes the sign.
  const int branches = vp.has_sign_hint() ? 1 : 2;
  for (int b = 0; b < branches; ++b) {
    const Vec3 axis = b == 0 ? Vec3(vp.v_prime) : Vec3(-vp.v_prime);
    const Mat3 Rx2 = rotation_to_axis(axis);
    problem.rx_prime = Rx2;
    for (int i = 0; i < 3; ++i) problem.q_prime[i] = Rx2 * points[i].p_prime;
    for (const auto& sol : solve_upright_3pt(problem, opts)) {
      result.candidates.emplace_back(Rx2.transpose() * rotation_about_y(sol.yaw) * Rx,
                                     Rx2.transpose() * sol.translation);
    }
  }
  if (result.candidates.empty()) result.status = SolverStatus::kNoRealRoot;
  return result;
}

SolverResult solve_0_3_1(std::span<const LineMatch> lines, const VPMatch& vp,
                         const SolverOptions& opts) {
  SolverResult result;
  result.solver = SolverKind::L3V1;
  if (lines.size() != 3) {
    result.status = SolverStatus::kInvalidInput;
    return result;
  }
  std::array<PointMatch, 3> junctions;
  constexpr std::array<std::array<int, 2>, 3> kPairs = {{{0, 1}, {0, 2}, {1, 2}}};
  for (int k = 0; k < 3; ++k) {
    const auto j = line_line_junction(lines[kPairs[k][0]], lines[kPairs[k][1]],
                                      opts.geometry.parallel);
    if (!j) {
      result.status = SolverStatus::kNearParallel;
      return result;
    }
    junctions[k] = *j;
  }
  result = solve_3_0_1(junctions, vp, opts);
  result.solver = SolverKind::L3V1;
  return result;
}

}  // namespace relpose
