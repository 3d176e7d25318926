#include "relpose/hybrid_ransac.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "relpose/geometry.h"

namespace relpose {

double RansacConfig::prior(SolverKind kind) const {
  const auto it = solver_priors.find(kind);
  return it == solver_priors.end() ? 1.0 : it->second;
}

double RansacConfig::refine_vp_weight() const {
  if (vp_weight) return *vp_weight;
  const double r = point_threshold / vp_threshold;
  return r * r;
}

void RansacConfig::validate() const {
  if (!(point_threshold > 0.0) || !(vp_threshold > 0.0)) {
    throw std::invalid_argument("thresholds must be positive");
  }
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw std::invalid_argument("confidence must lie in (0, 1)");
  }
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be positive");
  if (!(line_inlier_ratio_prior > 0.0 && line_inlier_ratio_prior <= 1.0)) {
    throw std::invalid_argument("line inlier ratio prior must lie in (0, 1]");
  }
  if (vp_weight && !(*vp_weight >= 0.0)) throw std::invalid_argument("negative VP weight");
  if (!(min_sampling_ratio >= 0.0 && min_sampling_ratio <= 1.0)) {
    throw std::invalid_argument("min_sampling_ratio must lie in [0, 1]");
  }
  bool any = false;
  for (const auto& [kind, w] : solver_priors) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("negative solver prior");
  }
  for (SolverKind k : enabled_solvers) any = any || prior(k) > 0.0;
  if (!any) throw std::invalid_argument("no enabled solver has a positive prior");
}

InlierSets classify_inliers(const RelativePose& pose, std::span<const PointMatch> pool,
                            std::span<const VPMatch> vps, const RansacConfig& cfg) {
  InlierSets out;
  const Mat3 E = essential_from_pose(pose);
  for (int i = 0; i < static_cast<int>(pool.size()); ++i) {
    if (std::abs(sampson_signed(E, pool[i].p, pool[i].p_prime)) < cfg.point_threshold) {
      out.points.push_back(i);
    }
  }
  for (int j = 0; j < static_cast<int>(vps.size()); ++j) {
    if (vp_rotation_residual(pose, vps[j]) < cfg.vp_threshold) out.vps.push_back(j);
  }
  return out;
}

InlierSets classify_inliers(const RelativePose& pose, const CorrespondenceSet& data,
                            const RansacConfig& cfg) {
  const auto pool = point_pool(data, cfg.use_junctions, cfg.use_endpoints);
  return classify_inliers(pose, pool, data.vps, cfg);
}

double msac_score(const RelativePose& pose, std::span<const PointMatch> pool,
                  std::span<const VPMatch> vps, const RansacConfig& cfg) {
  const Mat3 E = essential_from_pose(pose);
  const double inv_p = 1.0 / (cfg.point_threshold * cfg.point_threshold);
  const double inv_v = 1.0 / (cfg.vp_threshold * cfg.vp_threshold);
  double score = 0.0;
  for (const auto& m : pool) {
    const double r = sampson_signed(E, m.p, m.p_prime);
    score += std::isfinite(r) ? std::min(r * r * inv_p, 1.0) : 1.0;
  }
  for (const auto& vm : vps) {
    const double a = vp_rotation_residual(pose, vm);
    score += std::isfinite(a) ? std::min(a * a * inv_v, 1.0) : 1.0;
  }
  return score;
}

double msac_score(const RelativePose& pose, const CorrespondenceSet& data,
                  const RansacConfig& cfg) {
  const auto pool = point_pool(data, cfg.use_junctions, cfg.use_endpoints);
  return msac_score(pose, pool, data.vps, cfg);
}

namespace {

double good_sample_probability(SolverKind kind, const RansacConfig& cfg, double point_ratio,
                               double vp_ratio) {
  const SampleSize s = sample_size(kind);
  return std::pow(point_ratio, s.points) * std::pow(cfg.line_inlier_ratio_prior, s.lines) *
         std::pow(vp_ratio, s.vps);
}

double sampling_weight(SolverKind kind, const RansacConfig& cfg, double point_ratio,
                       double vp_ratio) {
  return cfg.prior(kind) * good_sample_probability(kind, cfg,
                                                   std::max(point_ratio, cfg.min_sampling_ratio),
                                                   std::max(vp_ratio, cfg.min_sampling_ratio));
}

bool sampleable(SolverKind kind, int num_points, int num_lines, int num_vps) {
  const SampleSize s = sample_size(kind);
  return num_points >= s.points && num_lines >= s.lines && num_vps >= s.vps;
}

// k distinct indices out of [0, n), partial Fisher-Yates.
std::vector<int> draw_indices(int n, int k, std::mt19937_64& rng, std::vector<int>& scratch) {
  scratch.resize(n);
  std::iota(scratch.begin(), scratch.end(), 0);
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<int> pick(i, n - 1);
    std::swap(scratch[i], scratch[pick(rng)]);
  }
  return {scratch.begin(), scratch.begin() + k};
}

// Sign of the translation putting all sample points in front of both
// cameras; empty when neither does. Samples without points keep the sign.
std::optional<RelativePose> cheirality(const RelativePose& pose,
                                       std::span<const PointMatch> sample_points) {
  if (sample_points.empty()) return pose;
  RelativePose flipped = pose;
  flipped.translation = -pose.translation;
  for (const RelativePose* cand : std::array<const RelativePose*, 2>{&pose, &flipped}) {
    bool all = true;
    for (const auto& m : sample_points) {
      if (!is_in_front(*cand, m)) {
        all = false;
        break;
      }
    }
    if (all) return *cand;
  }
  return std::nullopt;
}

// Majority vote over the inliers; pure rotations carry no sign.
RelativePose orient_translation(const RelativePose& pose, std::span<const PointMatch> pool,
                                std::span<const int> inliers) {
  if (pose.pure_rotation) return pose;
  int front = 0, back = 0;
  RelativePose flipped = pose;
  flipped.translation = -pose.translation;
  for (int i : inliers) {
    if (is_in_front(pose, pool[i])) ++front;
    if (is_in_front(flipped, pool[i])) ++back;
  }
  return back > front ? flipped : pose;
}

}  // namespace

std::map<SolverKind, double> solver_probabilities(const RansacConfig& cfg, int num_points,
                                                  int num_lines, int num_vps,
                                                  double point_ratio, double vp_ratio) {
  std::map<SolverKind, double> p;
  double total = 0.0;
  for (SolverKind k : cfg.enabled_solvers) {
    double w = 0.0;
    if (sampleable(k, num_points, num_lines, num_vps)) {
      w = sampling_weight(k, cfg, point_ratio, vp_ratio);
    }
    p[k] = w;
    total += w;
  }
  if (total > 0.0) {
    for (auto& [k, w] : p) w /= total;
  }
  return p;
}

double required_iterations(SolverKind kind, const RansacConfig& cfg, double point_ratio,
                           double vp_ratio) {
  const double good = good_sample_probability(kind, cfg, point_ratio, vp_ratio);
  if (good >= 1.0) return 1.0;
  if (good <= 0.0) return std::numeric_limits<double>::infinity();
  return std::max(1.0, std::ceil(std::log(1.0 - cfg.confidence) / std::log1p(-good)));
}

RansacReport run_hybrid_ransac(const CorrespondenceSet& data, const RansacConfig& cfg) {
  cfg.validate();
  const std::vector<PointMatch> pool = point_pool(data, cfg.use_junctions, cfg.use_endpoints);
  const int np = static_cast<int>(pool.size());
  const int nl = static_cast<int>(data.lines.size());
  const int nv = static_cast<int>(data.vps.size());

  std::vector<SolverKind> active;
  for (SolverKind k : cfg.enabled_solvers) {
    if (std::find(active.begin(), active.end(), k) != active.end()) continue;
    if (cfg.prior(k) > 0.0 && sampleable(k, np, nl, nv)) active.push_back(k);
  }
  if (active.empty()) {
    throw InsufficientData("no enabled solver has enough correspondences for a minimal sample");
  }

  RansacReport report;
  report.pool_size = np;
  for (SolverKind k : cfg.enabled_solvers) report.per_solver_stats[k];

  std::mt19937_64 rng(cfg.rng_seed);
  std::vector<int> scratch;
  double point_ratio = 0.5, vp_ratio = 0.5;
  double best_score = std::numeric_limits<double>::infinity();
  double best_angle = std::numeric_limits<double>::infinity();
  RelativePose best;
  bool found = false;

  std::vector<double> weights(active.size());
  int iter = 0;
  report.terminated_by = Termination::kMaxIterations;
  while (iter < cfg.max_iterations) {
    for (size_t i = 0; i < active.size(); ++i) {
      weights[i] = sampling_weight(active[i], cfg, point_ratio, vp_ratio);
    }
    if (std::all_of(weights.begin(), weights.end(), [](double w) { return w <= 0.0; })) {
      std::fill(weights.begin(), weights.end(), 1.0);
    }
    std::discrete_distribution<size_t> pick_solver(weights.begin(), weights.end());
    const SolverKind kind = active[pick_solver(rng)];
    const SampleSize size = sample_size(kind);
    ++iter;

    MinimalSample sample;
    for (int i : draw_indices(np, size.points, rng, scratch)) sample.points.push_back(pool[i]);
    for (int i : draw_indices(nl, size.lines, rng, scratch)) sample.lines.push_back(data.lines[i]);
    for (int i : draw_indices(nv, size.vps, rng, scratch)) sample.vps.push_back(data.vps[i]);

    SolverStats& stats = report.per_solver_stats[kind];
    ++stats.draws;
    const SolverResult result = solve(kind, sample, cfg.solver_options);
    if (result.ok() && !result.candidates.empty()) ++stats.successes;

    bool improved = false;
    for (const RelativePose& c : result.candidates) {
      const auto oriented = cheirality(c, sample.points);
      if (!oriented) continue;
      const double score = msac_score(*oriented, pool, data.vps, cfg);
      if (!std::isfinite(score)) continue;
      stats.best_score = std::min(stats.best_score, score);
      const double angle = rotation_angle(oriented->rotation);
      if (score < best_score || (score == best_score && angle < best_angle)) {
        best_score = score;
        best_angle = angle;
        best = *oriented;
        report.best_solver = kind;
        found = true;
        improved = true;
      }
    }
    if (improved) {
      const InlierSets in = classify_inliers(best, pool, data.vps, cfg);
      point_ratio = np > 0 ? static_cast<double>(in.points.size()) / np : 0.0;
      vp_ratio = nv > 0 ? static_cast<double>(in.vps.size()) / nv : 0.0;
    }
    if (found) {
      bool done = true;
      for (SolverKind k : active) {
        if (report.per_solver_stats[k].draws < required_iterations(k, cfg, point_ratio, vp_ratio)) {
          done = false;
          break;
        }
      }
      if (done) {
        report.terminated_by = Termination::kConfidence;
        break;
      }
    }
  }
  report.iterations = iter;
  if (!found) throw EstimationFailed("no hypothesis produced a finite score");

  report.unrefined_pose = best;
  InlierSets inliers = classify_inliers(best, pool, data.vps, cfg);
  RelativePose final_pose = best;
  double final_score = best_score;
  RefineOptions ro;
  ro.point_threshold = cfg.point_threshold;
  ro.vp_weight = cfg.refine_vp_weight();
  // The refinement is repeated on the updated inlier set while it changes.
  for (int round = 0; cfg.refine && round < cfg.refine_rounds; ++round) {
    const int ni = static_cast<int>(inliers.points.size());
    const int nvi = static_cast<int>(inliers.vps.size());
    if (!(ni >= 5 || (ni >= 3 && nvi >= 1))) break;
    std::vector<PointMatch> pts;
    std::vector<VPMatch> vps;
    for (int i : inliers.points) pts.push_back(pool[i]);
    for (int j : inliers.vps) vps.push_back(data.vps[j]);
    RelativePose refined = refine_pose(final_pose, pts, vps, ro);
    InlierSets refined_inliers = classify_inliers(refined, pool, data.vps, cfg);
    refined = orient_translation(refined, pool, refined_inliers.points);
    const double s = msac_score(refined, pool, data.vps, cfg);
    if (!(s <= final_score)) break;
    final_pose = refined;
    final_score = s;
    const bool same = refined_inliers.points == inliers.points && refined_inliers.vps == inliers.vps;
    inliers = std::move(refined_inliers);
    if (same) break;
  }

  report.best_pose = final_pose;
  report.point_inliers = std::move(inliers.points);
  report.vp_inliers = std::move(inliers.vps);
  report.score = msac_score(final_pose, pool, data.vps, cfg);
  return report;
}

}  // namespace relpose
