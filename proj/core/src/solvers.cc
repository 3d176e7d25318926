#include "relpose/solvers.h"

#include <cmath>
#include <numbers>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "relpose/geometry.h"

namespace relpose {
namespace {

struct SolverInfo {
  SolverKind kind;
  std::string_view tag;
  std::string_view code;
  SampleSize size;
};

constexpr std::array<SolverInfo, 13> kInfo = {{
    {SolverKind::P5, "P5", "5-0-0", {5, 0, 0}},
    {SolverKind::P4H, "P4H", "4-0-0", {4, 0, 0}},
    {SolverKind::P3L1H, "P3L1H", "3-1-0", {3, 1, 0}},
    {SolverKind::P2L2H, "P2L2H", "2-2-0", {2, 2, 0}},
    {SolverKind::P1L3H, "P1L3H", "1-3-0", {1, 3, 0}},
    {SolverKind::L4H, "L4H", "0-4-0", {0, 4, 0}},
    {SolverKind::P2L3, "P2L3", "2-3-0", {2, 3, 0}},
    {SolverKind::P3V1, "P3V1", "3-0-1", {3, 0, 1}},
    {SolverKind::L3V1, "L3V1", "0-3-1", {0, 3, 1}},
    {SolverKind::P2V2, "P2V2", "2-0-2", {2, 0, 2}},
    {SolverKind::P2L1V1Perp, "P2L1V1Perp", "2-1-1perp", {2, 1, 1}},
    {SolverKind::P1L2V1Perp, "P1L2V1Perp", "1-2-1perp", {1, 2, 1}},
    {SolverKind::P2V1Perp, "P2V1Perp", "2-0-1perp", {2, 0, 1}},
}};

const SolverInfo& info(SolverKind kind) { return kInfo[static_cast<int>(kind)]; }

SolverResult failure(SolverKind kind, SolverStatus status) {
  SolverResult r;
  r.solver = kind;
  r.status = status;
  return r;
}

}  // namespace

SampleSize sample_size(SolverKind kind) { return info(kind).size; }
std::string_view solver_tag(SolverKind kind) { return info(kind).tag; }
std::string_view solver_code(SolverKind kind) { return info(kind).code; }
bool uses_vps(SolverKind kind) { return info(kind).size.vps > 0; }

std::optional<SolverKind> parse_solver(std::string_view text) {
  for (const auto& i : kInfo) {
    if (text == i.tag || text == i.code) return i.kind;
  }
  return std::nullopt;
}

std::string_view status_name(SolverStatus status) {
  switch (status) {
    case SolverStatus::kOk: return "Ok";
    case SolverStatus::kDegenerateSample: return "DegenerateSample";
    case SolverStatus::kNearParallel: return "NearParallel";
    case SolverStatus::kParallelVPs: return "ParallelVPs";
    case SolverStatus::kRankDeficientA: return "RankDeficientA";
    case SolverStatus::kNoRealRoot: return "NoRealRoot";
    case SolverStatus::kCoincidentPoints: return "CoincidentPoints";
    case SolverStatus::kInvalidInput: return "InvalidInput";
  }
  return "Unknown";
}

SolverResult solve_2_0_2(std::span<const PointMatch> points, std::span<const VPMatch> vps,
                         const SolverOptions& opts) {
  if (points.size() != 2 || vps.size() != 2) {
    return failure(SolverKind::P2V2, SolverStatus::kInvalidInput);
  }
  const Vec3 v1 = vps[0].v.normalized(), v2 = vps[1].v.normalized();
  const Vec3 w1 = vps[0].v_prime.normalized(), w2 = vps[1].v_prime.normalized();
  if (v1.cross(v2).norm() < opts.geometry.parallel || w1.cross(w2).norm() < opts.geometry.parallel) {
    return failure(SolverKind::P2V2, SolverStatus::kParallelVPs);
  }
  Mat3 M;
  M << v1, v2, v1.cross(v2);
  const Mat3 M_inv = M.inverse();

  SolverResult result;
  result.solver = SolverKind::P2V2;
  bool rank_deficient = false;
  const int n1 = vps[0].has_sign_hint() ? 1 : 2;
  const int n2 = vps[1].has_sign_hint() ? 1 : 2;
  for (int a = 0; a < n1; ++a) {
    for (int b = 0; b < n2; ++b) {
      const Vec3 x = a == 0 ? w1 : Vec3(-w1);
      const Vec3 y = b == 0 ? w2 : Vec3(-w2);
      Mat3 N;
      N << x, y, x.cross(y);
      Mat3 R = N * M_inv;
      const double err = (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff();
      if (err > opts.vp_rotation_tolerance || R.determinant() < 0.0) continue;
      R = project_to_rotation(R);

      // t is orthogonal to (R p_i) x p'_i for both points.
      Eigen::Matrix<double, 2, 3> A;
      for (int i = 0; i < 2; ++i) A.row(i) = (R * points[i].p).cross(points[i].p_prime).transpose();
      Eigen::JacobiSVD<Eigen::Matrix<double, 2, 3>> svd(A, Eigen::ComputeFullV);
      if (svd.singularValues()(0) < opts.geometry.algebra) {
        rank_deficient = true;
        continue;
      }
      result.candidates.emplace_back(R, svd.matrixV().col(2));
    }
  }
  if (result.candidates.empty()) {
    result.status = rank_deficient ? SolverStatus::kRankDeficientA : SolverStatus::kDegenerateSample;
  }
  return result;
}

SolverResult solve_2_1_1_perp(std::span<const PointMatch> points, const LineMatch& line,
                              const VPMatch& vp, const SolverOptions& opts) {
  const Vec3 l = line.l.normalized(), l2 = line.l_prime.normalized();
  const Vec3 v = vp.v.normalized(), v2 = vp.v_prime.normalized();
  // A line through the VP has the VP direction itself.
  if (std::abs(l.dot(v)) < opts.geometry.parallel || std::abs(l2.dot(v2)) < opts.geometry.parallel) {
    return failure(SolverKind::P2L1V1Perp, SolverStatus::kParallelVPs);
  }
  const Vec3 d = l.cross(v), d2 = l2.cross(v2);
  if (d.norm() < opts.geometry.parallel || d2.norm() < opts.geometry.parallel) {
    return failure(SolverKind::P2L1V1Perp, SolverStatus::kParallelVPs);
  }
  VPMatch second;
  second.v = d.normalized();
  second.v_prime = d2.normalized();
  const std::array<VPMatch, 2> pair = {vp, second};
  SolverResult result = solve_2_0_2(points, pair, opts);
  result.solver = SolverKind::P2L1V1Perp;
  return result;
}

SolverResult solve_1_2_1_perp(const PointMatch& point, std::span<const LineMatch> lines,
                              const VPMatch& vp, const SolverOptions& opts) {
  if (lines.size() != 2) return failure(SolverKind::P1L2V1Perp, SolverStatus::kInvalidInput);
  const auto junction = line_line_junction(lines[0], lines[1], opts.geometry.parallel);
  if (!junction) return failure(SolverKind::P1L2V1Perp, SolverStatus::kNearParallel);
  const std::array<PointMatch, 2> pts = {point, *junction};
  SolverResult result = solve_2_1_1_perp(pts, lines[0], vp, opts);
  result.solver = SolverKind::P1L2V1Perp;
  return result;
}

SolverResult solve_2_0_1_perp(std::span<const PointMatch> points, const VPMatch& vp,
                              const SolverOptions& opts) {
  if (points.size() != 2) return failure(SolverKind::P2V1Perp, SolverStatus::kInvalidInput);
  const PointMatch& a = points[0];
  const PointMatch& b = points[1];
  if ((a.p.hnormalized() - b.p.hnormalized()).norm() < opts.geometry.parallel ||
      (a.p_prime.hnormalized() - b.p_prime.hnormalized()).norm() < opts.geometry.parallel) {
    return failure(SolverKind::P2V1Perp, SolverStatus::kCoincidentPoints);
  }
  LineMatch line;
  line.l = normalize_line(a.p.cross(b.p));
  line.l_prime = normalize_line(a.p_prime.cross(b.p_prime));
  line.endpoints = {a.p, b.p};
  line.endpoints_prime = {a.p_prime, b.p_prime};
  SolverResult result = solve_2_1_1_perp(points, line, vp, opts);
  result.solver = SolverKind::P2V1Perp;
  return result;
}

SolverResult solve_2_3_0(std::span<const PointMatch> points, std::span<const LineMatch> lines,
                         const SolverOptions& opts) {
  if (points.size() != 2 || lines.size() != 3) {
    return failure(SolverKind::P2L3, SolverStatus::kInvalidInput);
  }
  std::array<PointMatch, 5> all;
  all[0] = points[0];
  all[1] = points[1];
  constexpr std::array<std::array<int, 2>, 3> kPairs = {{{0, 1}, {0, 2}, {1, 2}}};
  for (int k = 0; k < 3; ++k) {
    const auto j = line_line_junction(lines[kPairs[k][0]], lines[kPairs[k][1]],
                                      opts.geometry.parallel);
    if (!j) return failure(SolverKind::P2L3, SolverStatus::kNearParallel);
    all[2 + k] = *j;
  }
  SolverResult result = solve_5pc(all, opts);
  result.solver = SolverKind::P2L3;
  return result;
}

SolverResult solve(SolverKind kind, const MinimalSample& sample, const SolverOptions& opts) {
  const SampleSize size = sample_size(kind);
  if (static_cast<int>(sample.points.size()) != size.points ||
      static_cast<int>(sample.lines.size()) != size.lines ||
      static_cast<int>(sample.vps.size()) != size.vps) {
    return failure(kind, SolverStatus::kInvalidInput);
  }
  switch (kind) {
    case SolverKind::P5: return solve_5pc(sample.points, opts);
    case SolverKind::P4H:
    case SolverKind::P3L1H:
    case SolverKind::P2L2H:
    case SolverKind::P1L3H:
    case SolverKind::L4H: return solve_homography_family(sample.points, sample.lines, opts);
    case SolverKind::P2L3: return solve_2_3_0(sample.points, sample.lines, opts);
    case SolverKind::P3V1: return solve_3_0_1(sample.points, sample.vps[0], opts);
    case SolverKind::L3V1: return solve_0_3_1(sample.lines, sample.vps[0], opts);
    case SolverKind::P2V2: return solve_2_0_2(sample.points, sample.vps, opts);
    case SolverKind::P2L1V1Perp:
      return solve_2_1_1_perp(sample.points, sample.lines[0], sample.vps[0], opts);
    case SolverKind::P1L2V1Perp:
      return solve_1_2_1_perp(sample.points[0], sample.lines, sample.vps[0], opts);
    case SolverKind::P2V1Perp: return solve_2_0_1_perp(sample.points, sample.vps[0], opts);
  }
  return failure(kind, SolverStatus::kInvalidInput);
}

Vec3 line_direction(const Mat3& R, const LineMatch& line) {
  return line.l.cross(R.transpose() * line.l_prime).normalized();
}

double orthogonality_deviation(const RelativePose& pose, const LineMatch& line,
                               const VPMatch& vp) {
  const Vec3 d = line_direction(pose.rotation, line);
  return std::abs(std::numbers::pi / 2.0 - angle_between(d, vp.v));
}

}  // namespace relpose
