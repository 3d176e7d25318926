#include "relpose/vp_estimation.h"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/SVD>

namespace relpose {
namespace {

double signed_tardif(const Vec3& v, const std::array<Vec3, 2>& segment, const Mat3& K) {
  const Vec3 a = K * (segment[0] / segment[0].z());
  const Vec3 b = K * (segment[1] / segment[1].z());
  const Vec3 mid = 0.5 * (a + b);
  const Vec3 l = (K * v).cross(mid);
  const double n = l.head<2>().norm();
  if (n == 0.0) return 0.0;
  return l.dot(b) / n;
}

const std::array<Vec3, 2>& segment_of(const LineMatch& m, int image) {
  return image == 0 ? m.endpoints : m.endpoints_prime;
}

// Orthonormal basis of the tangent plane at unit v.
std::pair<Vec3, Vec3> tangent_basis(const Vec3& v) {
  int k = 0;
  v.cwiseAbs().minCoeff(&k);
  const Vec3 b1 = v.cross(Vec3::Unit(k)).normalized();
  return {b1, v.cross(b1)};
}

Vec3 refine_direction(const Vec3& v0, std::span<const LineMatch> lines,
                      std::span<const int> indices, int image, const Mat3& K) {
  const int n = static_cast<int>(indices.size());
  Vec3 v = v0.normalized();
  auto residuals = [&](const Vec3& x) {
    Eigen::VectorXd r(n);
    for (int i = 0; i < n; ++i) r(i) = signed_tardif(x, segment_of(lines[indices[i]], image), K);
    return r;
  };
  Eigen::VectorXd r = residuals(v);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  for (int iter = 0; iter < 50 && cost > 0.0; ++iter) {
    const auto [b1, b2] = tangent_basis(v);
    Eigen::MatrixXd J(n, 2);
    constexpr double h = 1e-7;
    for (int k = 0; k < 2; ++k) {
      const Vec3& b = k == 0 ? b1 : b2;
      J.col(k) = (residuals((v + h * b).normalized()) - residuals((v - h * b).normalized())) / (2 * h);
    }
    const Eigen::Matrix2d JtJ = J.transpose() * J;
    const Eigen::Vector2d g = J.transpose() * r;
    bool improved = false;
    for (int attempt = 0; attempt < 10; ++attempt) {
      Eigen::Matrix2d A = JtJ;
      A.diagonal() *= 1.0 + lambda;
      A.diagonal().array() += 1e-12;
      const Eigen::Vector2d delta = -A.ldlt().solve(g);
      const Vec3 candidate = (v + delta(0) * b1 + delta(1) * b2).normalized();
      const Eigen::VectorXd rc = residuals(candidate);
      const double c = rc.squaredNorm();
      if (c < cost) {
        const double gain = cost - c;
        v = candidate;
        r = rc;
        cost = c;
        lambda = std::max(lambda / 10.0, 1e-12);
        improved = true;
        if (gain < 1e-14 * (1.0 + cost) || delta.norm() < 1e-14) return v;
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) break;
  }
  return v;
}

}  // namespace

std::optional<std::pair<Vec3, Vec3>> vp_minimal_from_two_line_pairs(const LineMatch& a,
                                                                    const LineMatch& b,
                                                                    double tol) {
  const Vec3 v = a.l.normalized().cross(b.l.normalized());
  const Vec3 v2 = a.l_prime.normalized().cross(b.l_prime.normalized());
  if (v.norm() < tol || v2.norm() < tol) return std::nullopt;
  return std::make_pair(Vec3(v.normalized()), Vec3(v2.normalized()));
}

double tardif_distance(const Vec3& v, const std::array<Vec3, 2>& segment,
                       const CameraIntrinsics& K) {
  return std::abs(signed_tardif(v, segment, K.matrix()));
}

double tardif_cost(const Vec3& v, std::span<const LineMatch> lines, std::span<const int> indices,
                   int image, const CameraIntrinsics& K) {
  const Mat3 Km = K.matrix();
  double cost = 0.0;
  for (int i : indices) {
    const double d = signed_tardif(v, segment_of(lines[i], image), Km);
    cost += d * d;
  }
  return cost;
}

Vec3 vp_least_squares(std::span<const Vec3> lines) {
  Eigen::MatrixXd A(lines.size(), 3);
  for (std::size_t i = 0; i < lines.size(); ++i) A.row(i) = lines[i].transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  return svd.matrixV().col(2);
}

VPModel refine_vp(const VPModel& model, std::span<const LineMatch> lines, const VPFitConfig& cfg) {
  VPModel out = model;
  if (model.inlier_lines.size() < 2) return out;
  out.v = refine_direction(model.v, lines, model.inlier_lines, 0, cfg.intrinsics[0].matrix());
  out.v_prime =
      refine_direction(model.v_prime, lines, model.inlier_lines, 1, cfg.intrinsics[1].matrix());
  return out;
}

std::vector<VPModel> fit_vps_jointly(std::span<const LineMatch> lines, const VPFitConfig& cfg) {
  std::vector<VPModel> models;
  const Mat3 K1 = cfg.intrinsics[0].matrix(), K2 = cfg.intrinsics[1].matrix();
  std::vector<int> remaining(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) remaining[i] = static_cast<int>(i);

  auto inliers_of = [&](const Vec3& v, const Vec3& v2) {
    std::vector<int> in;
    for (int i : remaining) {
      if (std::abs(signed_tardif(v, lines[i].endpoints, K1)) <= cfg.inlier_threshold &&
          std::abs(signed_tardif(v2, lines[i].endpoints_prime, K2)) <= cfg.inlier_threshold) {
        in.push_back(i);
      }
    }
    return in;
  };

  std::mt19937_64 rng(cfg.rng_seed);
  const int min_support = std::max(2, cfg.min_support);
  while (static_cast<int>(models.size()) < cfg.max_models &&
         static_cast<int>(remaining.size()) >= min_support) {
    const int n = static_cast<int>(remaining.size());
    VPModel best;
    double needed = cfg.max_iterations;
    for (int it = 0; it < needed && it < cfg.max_iterations; ++it) {
      std::uniform_int_distribution<int> pick(0, n - 1);
      const int a = pick(rng);
      int b = pick(rng);
      while (b == a) b = pick(rng);
      const auto vp = vp_minimal_from_two_line_pairs(lines[remaining[a]], lines[remaining[b]]);
      if (!vp) continue;
      std::vector<int> in = inliers_of(vp->first, vp->second);
      // Strictly better only, so ties keep the earliest sample.
      if (in.size() > best.inlier_lines.size()) {
        best = {vp->first, vp->second, std::move(in)};
        const double w = static_cast<double>(best.inlier_lines.size()) / n;
        const double miss = 1.0 - w * w;
        needed = miss <= 0.0 ? 0.0 : std::log(1.0 - cfg.confidence) / std::log(miss);
      }
    }
    if (static_cast<int>(best.inlier_lines.size()) < min_support) break;
    if (cfg.refine) {
      VPModel refined = refine_vp(best, lines, cfg);
      refined.inlier_lines = inliers_of(refined.v, refined.v_prime);
      if (refined.inlier_lines.size() >= best.inlier_lines.size()) best = std::move(refined);
    }
    std::vector<int> keep;
    std::set_difference(remaining.begin(), remaining.end(), best.inlier_lines.begin(),
                        best.inlier_lines.end(), std::back_inserter(keep));
    remaining = std::move(keep);
    models.push_back(std::move(best));
  }
  std::stable_sort(models.begin(), models.end(), [](const VPModel& a, const VPModel& b) {
    return a.inlier_lines.size() > b.inlier_lines.size();
  });
  return models;
}

bool orient_vp(Vec3& v, const std::array<Vec3, 2>& segment) {
  const Vec2 a = segment[0].hnormalized(), b = segment[1].hnormalized();
  // Image direction of the line at A when walking towards the VP.
  const Vec2 towards = v.head<2>() - a * v.z();
  const double s = (b - a).dot(towards);
  if (s == 0.0 || !std::isfinite(s)) return false;
  if (s < 0.0) v = -v;
  return true;
}

VPMatch to_vp_match(const VPModel& model, std::span<const LineMatch> lines) {
  VPMatch m;
  m.v = model.v.normalized();
  m.v_prime = model.v_prime.normalized();
  m.supporting_lines = model.inlier_lines;
  if (!model.inlier_lines.empty()) {
    const LineMatch& first = lines[model.inlier_lines.front()];
    m.oriented[0] = orient_vp(m.v, first.endpoints);
    m.oriented[1] = orient_vp(m.v_prime, first.endpoints_prime);
  }
  return m;
}

}  // namespace relpose
