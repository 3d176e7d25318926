#include "relpose/experiments.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "relpose/geometry.h"

namespace relpose {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::runtime_error("bad number in CSV: " + std::string(s));
  }
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    const size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  if (v.size() % 2 == 1) return v[mid];
  const double hi = v[mid];
  const double lo = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lo + hi);
}

// No sign filter for noisy VPs; the candidate closest to the ground truth is
// picked anyway.
SolverOptions noisy_options(SolverOptions opts) {
  opts.vp_rotation_tolerance = std::numeric_limits<double>::infinity();
  return opts;
}

// Solves one scene and optionally refines the best candidate with `pt_lo`
// extra points of the same scene.
PoseError run_trial(SolverKind kind, const SceneConfig& sc, int pt_lo, const SolverFn& solver,
                    const SolverOptions& so) {
  const SyntheticScene scene = sample_scene(kind, sc);
  const SolverResult res = solver(kind, scene.sample, so);
  if (pt_lo <= 0 || res.candidates.empty()) {
    return best_candidate_errors(res.candidates, scene.gt_pose);
  }

  // Local optimization of every candidate: the translation is re-fitted to
  // all points for the candidate rotation, then the pose is refined. The
  // refined candidate closest to the truth counts.
  std::vector<PointMatch> pts = scene.sample.points;
  const auto extra = sample_extra_points(scene, pt_lo, sc);
  pts.insert(pts.end(), extra.begin(), extra.end());
  RefineOptions ro;
  ro.point_threshold = 1.0;  // all entities are inliers here
  std::vector<RelativePose> refined;
  for (RelativePose c : res.candidates) {
    c.translation = translation_given_rotation(c.rotation, pts, c.translation);
    if (c.translation.dot(scene.gt_pose.translation) < 0.0) c.translation = -c.translation;
    refined.push_back(refine_pose(c, pts, scene.sample.vps, ro));
  }
  return best_candidate_errors(refined, scene.gt_pose);
}

Measurement make_row(const char* experiment, SolverKind kind, double sigma, int lpv, int pt_lo,
                     double deviation, const PoseError& e, std::uint64_t id) {
  Measurement m;
  m.experiment = experiment;
  m.solver = kind;
  m.sigma = sigma;
  m.lines_per_vp = lpv;
  m.pt_lo = pt_lo;
  m.deviation_deg = deviation;
  m.rot_err_deg = e.rotation * kRadToDeg;
  m.trans_err_deg = e.translation * kRadToDeg;
  m.instance_id = id;
  return m;
}

}  // namespace

SolverFn default_solver_fn() {
  return [](SolverKind kind, const MinimalSample& sample, const SolverOptions& opts) {
    return solve(kind, sample, opts);
  };
}

void write_csv(std::ostream& os, const std::vector<Measurement>& rows) {
  os << kCsvHeader << '\n';
  for (const auto& m : rows) {
    os << m.experiment << ',' << solver_tag(m.solver) << ',' << format_double(m.sigma) << ','
       << m.lines_per_vp << ',' << m.pt_lo << ',' << format_double(m.deviation_deg) << ','
       << format_double(m.rot_err_deg) << ',' << format_double(m.trans_err_deg) << ','
       << m.instance_id << '\n';
  }
}

std::vector<Measurement> read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) {
    throw std::runtime_error("CSV header mismatch");
  }
  std::vector<Measurement> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 9) throw std::runtime_error("CSV row with wrong field count: " + line);
    Measurement m;
    m.experiment = std::string(f[0]);
    const auto kind = parse_solver(f[1]);
    if (!kind) throw std::runtime_error("unknown solver in CSV: " + std::string(f[1]));
    m.solver = *kind;
    m.sigma = parse_double(f[2]);
    m.lines_per_vp = static_cast<int>(parse_double(f[3]));
    m.pt_lo = static_cast<int>(parse_double(f[4]));
    m.deviation_deg = parse_double(f[5]);
    m.rot_err_deg = parse_double(f[6]);
    m.trans_err_deg = parse_double(f[7]);
    m.instance_id = static_cast<std::uint64_t>(parse_double(f[8]));
    rows.push_back(std::move(m));
  }
  return rows;
}

int worker_count() {
  if (const char* env = std::getenv("RELPOSE_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, int threads) {
  const int workers =
      static_cast<int>(std::min<std::size_t>(threads > 0 ? threads : worker_count(), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

PoseError best_candidate_errors(const std::vector<RelativePose>& candidates,
                                const RelativePose& truth, RelativePose* best) {
  PoseError out{std::numbers::pi, std::numbers::pi};
  double best_sum = std::numeric_limits<double>::infinity();
  for (const RelativePose& c : candidates) {
    RelativePose aligned = c;
    if (aligned.translation.dot(truth.translation) < 0.0) aligned.translation = -c.translation;
    const PoseError e = pose_errors(aligned, truth);
    if (!std::isfinite(e.rotation) || !std::isfinite(e.translation)) continue;
    if (e.rotation + e.translation < best_sum) {
      best_sum = e.rotation + e.translation;
      out = e;
      if (best) *best = aligned;
    }
  }
  return out;
}

std::vector<Measurement> run_stability_experiment(const std::vector<SolverKind>& kinds,
                                                  const ExperimentOptions& opts) {
  if (opts.n < 1) throw std::invalid_argument("n must be positive");
  const SolverFn solver = opts.solver ? opts.solver : default_solver_fn();
  const std::size_t n = static_cast<std::size_t>(opts.n);
  std::vector<Measurement> rows(kinds.size() * n);
  parallel_for(
      rows.size(),
      [&](std::size_t idx) {
        const SolverKind kind = kinds[idx / n];
        const std::uint64_t i = idx % n;
        SceneConfig sc;
        sc.rng_seed = opts.seed;
        sc.instance = i;
        const PoseError e = run_trial(kind, sc, 0, solver, opts.solver_options);
        rows[idx] = make_row("stability", kind, 0.0, 0, 0, 0.0, e, i);
      },
      opts.threads);
  return rows;
}

std::vector<Measurement> run_noise_experiment(const NoiseExperimentConfig& cfg,
                                              const ExperimentOptions& opts) {
  if (opts.n < 1) throw std::invalid_argument("n must be positive");
  for (int l : cfg.lines_per_vp) {
    if (l < 2) throw std::invalid_argument("lines per VP must be at least 2");
  }
  for (double s : cfg.sigmas) {
    if (!(s >= 0.0)) throw std::invalid_argument("noise sigma must be non-negative");
  }
  if (cfg.with_lo) {
    for (int p : cfg.points_in_lo) {
      if (p < 1) throw std::invalid_argument("points in LO must be positive");
    }
  }
  const SolverFn solver = opts.solver ? opts.solver : default_solver_fn();
  const SolverOptions so = noisy_options(opts.solver_options);

  struct Cell {
    SolverKind kind;
    int lpv;
    double sigma;
    int pt_lo;
  };
  std::vector<Cell> cells;
  for (SolverKind kind : cfg.kinds) {
    const std::vector<int> lpvs = uses_vps(kind) ? cfg.lines_per_vp : std::vector<int>{0};
    const std::vector<int> los = cfg.with_lo ? cfg.points_in_lo : std::vector<int>{0};
    for (int lpv : lpvs) {
      for (double sigma : cfg.sigmas) {
        for (int lo : los) cells.push_back({kind, lpv, sigma, lo});
      }
    }
  }
  const std::size_t n = static_cast<std::size_t>(opts.n);
  std::vector<Measurement> rows(cells.size() * n);
  parallel_for(
      rows.size(),
      [&](std::size_t idx) {
        const Cell& c = cells[idx / n];
        const std::uint64_t i = idx % n;
        SceneConfig sc;
        sc.rng_seed = opts.seed;
        sc.instance = i;
        sc.noise_sigma = c.sigma;
        sc.lines_per_vp = std::max(2, c.lpv);
        sc.ortho_deviation = cfg.deviation_deg;
        const PoseError e = run_trial(c.kind, sc, c.pt_lo, solver, so);
        rows[idx] = make_row("noise", c.kind, c.sigma, c.lpv, c.pt_lo, cfg.deviation_deg, e, i);
      },
      opts.threads);
  return rows;
}

std::vector<Measurement> run_orthogonality_experiment(const OrthoExperimentConfig& cfg,
                                                      const ExperimentOptions& opts) {
  if (opts.n < 1) throw std::invalid_argument("n must be positive");
  for (double d : cfg.deviations_deg) {
    if (!(d >= 0.0 && d <= 45.0)) throw std::invalid_argument("deviation must lie in [0, 45]");
  }
  if (cfg.lines_per_vp < 2) throw std::invalid_argument("lines per VP must be at least 2");
  if (cfg.with_lo && cfg.points_in_lo < 1) {
    throw std::invalid_argument("points in LO must be positive");
  }
  const SolverFn solver = opts.solver ? opts.solver : default_solver_fn();
  const SolverOptions so = noisy_options(opts.solver_options);
  const int pt_lo = cfg.with_lo ? cfg.points_in_lo : 0;
  const std::size_t n = static_cast<std::size_t>(opts.n);
  const std::size_t nd = cfg.deviations_deg.size();
  std::vector<Measurement> rows(kPerpendicularSolvers.size() * nd * n);
  parallel_for(
      rows.size(),
      [&](std::size_t idx) {
        const SolverKind kind = kPerpendicularSolvers[idx / (nd * n)];
        const double dev = cfg.deviations_deg[(idx / n) % nd];
        const std::uint64_t i = idx % n;
        SceneConfig sc;
        sc.rng_seed = opts.seed;
        sc.instance = i;
        sc.noise_sigma = cfg.sigma;
        sc.lines_per_vp = cfg.lines_per_vp;
        sc.ortho_deviation = dev;
        const PoseError e = run_trial(kind, sc, pt_lo, solver, so);
        rows[idx] = make_row("ortho", kind, cfg.sigma, cfg.lines_per_vp, pt_lo, dev, e, i);
      },
      opts.threads);
  return rows;
}

void Log10Histogram::add(double error_rad) {
  const double x = std::log10(error_rad);
  if (!(x >= kLow)) {
    ++underflow;
    return;
  }
  if (x >= kHigh) {
    ++overflow;
    return;
  }
  const int bin = std::min(kBins - 1, static_cast<int>((x - kLow) / kWidth));
  ++counts[bin];
}

long Log10Histogram::total() const {
  long t = underflow + overflow;
  for (long c : counts) t += c;
  return t;
}

std::map<SolverKind, StabilitySummary> summarize_stability(const std::vector<Measurement>& rows,
                                                           double threshold_rad) {
  std::map<SolverKind, std::vector<double>> rot, trans;
  std::map<SolverKind, StabilitySummary> out;
  for (const auto& m : rows) {
    const double r = m.rot_err_deg / kRadToDeg;
    const double t = m.trans_err_deg / kRadToDeg;
    rot[m.solver].push_back(std::log10(r));
    trans[m.solver].push_back(std::log10(t));
    StabilitySummary& s = out[m.solver];
    s.solver = m.solver;
    ++s.instances;
    s.rot_hist.add(r);
    s.trans_hist.add(t);
    if (r < threshold_rad) s.fraction_rot_below += 1.0;
    if (t < threshold_rad) s.fraction_trans_below += 1.0;
  }
  for (auto& [kind, s] : out) {
    s.fraction_rot_below /= s.instances;
    s.fraction_trans_below /= s.instances;
    s.median_log10_rot = median(rot[kind]);
    s.median_log10_trans = median(trans[kind]);
  }
  return out;
}

std::map<CellKey, CellMean> mean_errors(const std::vector<Measurement>& rows) {
  std::map<CellKey, CellMean> out;
  for (const auto& m : rows) {
    CellMean& c = out[{m.solver, m.sigma, m.lines_per_vp, m.pt_lo, m.deviation_deg}];
    c.rot_err_deg += m.rot_err_deg;
    c.trans_err_deg += m.trans_err_deg;
    ++c.count;
  }
  for (auto& [k, c] : out) {
    c.rot_err_deg /= c.count;
    c.trans_err_deg /= c.count;
  }
  return out;
}

}  // namespace relpose
