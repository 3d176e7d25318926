#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "relpose/geometry.h"
#include "relpose/refinement.h"
#include "relpose/solvers.h"
#include "relpose/synthetic.h"

namespace relpose {

// Replaceable solver entry point, so the harness itself can be tested
// against deliberately broken solvers.
using SolverFn = std::function<SolverResult(SolverKind, const MinimalSample&, const SolverOptions&)>;

SolverFn default_solver_fn();

// One row of the benchmark CSV.
struct Measurement {
  std::string experiment;  // "stability", "noise" or "ortho"
  SolverKind solver = SolverKind::P5;
  double sigma = 0.0;
  int lines_per_vp = 0;  // 0 for solvers without VPs
  int pt_lo = 0;         // extra points used by the local optimization, 0 without
  double deviation_deg = 0.0;
  double rot_err_deg = 0.0;
  double trans_err_deg = 0.0;
  std::uint64_t instance_id = 0;
};

inline constexpr const char* kCsvHeader =
    "experiment,solver,sigma,lines_per_vp,pt_lo,deviation_deg,rot_err_deg,trans_err_deg,"
    "instance_id";

void write_csv(std::ostream& os, const std::vector<Measurement>& rows);
// Throws std::runtime_error on a header or field mismatch.
std::vector<Measurement> read_csv(std::istream& is);

// Worker count: RELPOSE_THREADS when set and positive, else the hardware
// concurrency. Results never depend on it.
int worker_count();

// Runs fn(i) for i in [0, n) on up to `threads` workers (0 = worker_count()).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, int threads = 0);

struct ExperimentOptions {
  std::uint64_t seed = 0;
  int n = 1000;
  int threads = 0;
  SolverFn solver;  // empty = default_solver_fn()
  SolverOptions solver_options;
};

// Errors of the candidate closest to the ground truth. The translation sign is
// aligned with the ground truth first, since it is fixed later by cheirality.
// Without candidates both errors are pi.
PoseError best_candidate_errors(const std::vector<RelativePose>& candidates,
                                const RelativePose& truth, RelativePose* best = nullptr);

std::vector<Measurement> run_stability_experiment(const std::vector<SolverKind>& kinds,
                                                  const ExperimentOptions& opts);

struct NoiseExperimentConfig {
  std::vector<SolverKind> kinds{kAllSolvers.begin(), kAllSolvers.end()};
  std::vector<double> sigmas{0.0, 0.5, 1.0, 2.0};
  std::vector<int> lines_per_vp{10};
  bool with_lo = false;
  std::vector<int> points_in_lo{10};
  double deviation_deg = 0.0;
};

std::vector<Measurement> run_noise_experiment(const NoiseExperimentConfig& cfg,
                                              const ExperimentOptions& opts);

struct OrthoExperimentConfig {
  std::vector<double> deviations_deg{0.0, 2.0, 4.0, 6.0, 8.0, 10.0};
  double sigma = 1.0;
  int lines_per_vp = 10;
  bool with_lo = true;
  int points_in_lo = 20;
};

inline constexpr std::array<SolverKind, 3> kPerpendicularSolvers = {
    SolverKind::P2L1V1Perp, SolverKind::P1L2V1Perp, SolverKind::P2V1Perp};

std::vector<Measurement> run_orthogonality_experiment(const OrthoExperimentConfig& cfg,
                                                      const ExperimentOptions& opts);

// Histogram of log10 errors in radians, 0.25 wide bins over [-16, 2].
struct Log10Histogram {
  static constexpr double kLow = -16.0;
  static constexpr double kHigh = 2.0;
  static constexpr double kWidth = 0.25;
  static constexpr int kBins = 72;

  std::array<long, kBins> counts{};
  long underflow = 0;  // below kLow, including exact zeros
  long overflow = 0;

  void add(double error_rad);
  long total() const;
};

struct StabilitySummary {
  SolverKind solver = SolverKind::P5;
  int instances = 0;
  double median_log10_rot = 0.0;
  double median_log10_trans = 0.0;
  double fraction_rot_below = 0.0;  // error < 1e-6 rad
  double fraction_trans_below = 0.0;
  Log10Histogram rot_hist, trans_hist;
};

std::map<SolverKind, StabilitySummary> summarize_stability(
    const std::vector<Measurement>& rows, double threshold_rad = 1e-6);

// Mean errors in degrees per (solver, sigma, lines_per_vp, pt_lo, deviation).
struct CellKey {
  SolverKind solver;
  double sigma;
  int lines_per_vp;
  int pt_lo;
  double deviation_deg;
  auto operator<=>(const CellKey&) const = default;
};

struct CellMean {
  double rot_err_deg = 0.0;
  double trans_err_deg = 0.0;
  int count = 0;
};

std::map<CellKey, CellMean> mean_errors(const std::vector<Measurement>& rows);

}  // namespace relpose
