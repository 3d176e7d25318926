#include "relpose/experiments.h"

#include <atomic>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

namespace relpose {
namespace {

TEST(Csv, RoundTripIsExact) {
  std::vector<Measurement> rows;
  for (int i = 0; i < 20; ++i) {
    Measurement m;
    m.experiment = i % 2 ? "noise" : "ortho";
    m.solver = kAllSolvers[i % kAllSolvers.size()];
    m.sigma = 0.1 * i;
    m.lines_per_vp = i;
    m.pt_lo = 2 * i;
    m.deviation_deg = std::sqrt(i);
    m.rot_err_deg = std::pow(10.0, -i) / 3.0;
    m.trans_err_deg = 180.0;
    m.instance_id = 1000 + i;
    rows.push_back(m);
  }
  std::stringstream ss;
  write_csv(ss, rows);
  const std::string text = ss.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), kCsvHeader);
  const auto back = read_csv(ss);
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].experiment, rows[i].experiment);
    EXPECT_EQ(back[i].solver, rows[i].solver);
    EXPECT_EQ(back[i].sigma, rows[i].sigma);
    EXPECT_EQ(back[i].lines_per_vp, rows[i].lines_per_vp);
    EXPECT_EQ(back[i].pt_lo, rows[i].pt_lo);
    EXPECT_EQ(back[i].deviation_deg, rows[i].deviation_deg);
    EXPECT_EQ(back[i].rot_err_deg, rows[i].rot_err_deg);
    EXPECT_EQ(back[i].trans_err_deg, rows[i].trans_err_deg);
    EXPECT_EQ(back[i].instance_id, rows[i].instance_id);
  }
}

TEST(Csv, RejectsMalformedInput) {
  std::stringstream bad_header("a,b,c\n");
  EXPECT_THROW(read_csv(bad_header), std::runtime_error);
  std::stringstream short_row(std::string(kCsvHeader) + "\nnoise,P5,1\n");
  EXPECT_THROW(read_csv(short_row), std::runtime_error);
  std::stringstream bad_solver(std::string(kCsvHeader) + "\nnoise,XX,1,0,0,0,1,1,0\n");
  EXPECT_THROW(read_csv(bad_solver), std::runtime_error);
  std::stringstream bad_number(std::string(kCsvHeader) + "\nnoise,P5,1x,0,0,0,1,1,0\n");
  EXPECT_THROW(read_csv(bad_number), std::runtime_error);
}

TEST(Histogram, BinsByLog10) {
  Log10Histogram h;
  h.add(0.0);      // underflow
  h.add(1e-17);    // underflow
  h.add(1e-16);    // first bin
  h.add(1e-12);    // bin (−12 + 16) / 0.25 = 16
  h.add(0.5);      // log10 = −0.301 -> bin 62
  h.add(100.0);    // overflow
  EXPECT_EQ(h.underflow, 2);
  EXPECT_EQ(h.overflow, 1);
  EXPECT_EQ(h.counts[0], 1);
  EXPECT_EQ(h.counts[16], 1);
  EXPECT_EQ(h.counts[62], 1);
  EXPECT_EQ(h.total(), 6);
}

TEST(Summary, StabilityQuantiles) {
  std::vector<Measurement> rows;
  const double deg = 180.0 / std::numbers::pi;
  for (int i = 0; i < 10; ++i) {
    Measurement m;
    m.solver = SolverKind::P4H;
    m.rot_err_deg = std::pow(10.0, -i) * deg;
    m.trans_err_deg = i < 9 ? 1e-10 * deg : 1.0;
    rows.push_back(m);
  }
  const auto s = summarize_stability(rows).at(SolverKind::P4H);
  EXPECT_EQ(s.instances, 10);
  EXPECT_NEAR(s.median_log10_rot, -4.5, 1e-9);
  EXPECT_NEAR(s.median_log10_trans, -10.0, 1e-9);
  EXPECT_NEAR(s.fraction_rot_below, 0.3, 1e-12);  // 1e-7, 1e-8, 1e-9
  EXPECT_NEAR(s.fraction_trans_below, 0.9, 1e-12);
  EXPECT_EQ(s.rot_hist.total(), 10);
}

TEST(Summary, MeanErrorsPerCell) {
  std::vector<Measurement> rows(4);
  rows[0].sigma = rows[1].sigma = 1.0;
  rows[0].rot_err_deg = 1.0;
  rows[1].rot_err_deg = 3.0;
  rows[2].sigma = rows[3].sigma = 2.0;
  rows[2].rot_err_deg = rows[3].rot_err_deg = 5.0;
  const auto means = mean_errors(rows);
  ASSERT_EQ(means.size(), 2u);
  EXPECT_EQ(means.begin()->second.rot_err_deg, 2.0);
  EXPECT_EQ(means.begin()->second.count, 2);
  EXPECT_EQ(means.rbegin()->second.rot_err_deg, 5.0);
}

TEST(Parallel, VisitsEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), [&](std::size_t i) { ++hits[i]; }, 4);
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(Parallel, ResultsIndependentOfThreadCount) {
  ExperimentOptions a;
  a.seed = 3;
  a.n = 50;
  a.threads = 1;
  ExperimentOptions b = a;
  b.threads = 4;
  NoiseExperimentConfig cfg;
  cfg.kinds = {SolverKind::P5, SolverKind::P2V2};
  cfg.sigmas = {1.0};
  std::stringstream sa, sb;
  write_csv(sa, run_noise_experiment(cfg, a));
  write_csv(sb, run_noise_experiment(cfg, b));
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(Stability, NoiselessErrorsAreTiny) {
  ExperimentOptions o;
  o.n = 100;
  const auto rows = run_stability_experiment({SolverKind::P5, SolverKind::P3V1}, o);
  ASSERT_EQ(rows.size(), 200u);
  const auto summary = summarize_stability(rows);
  for (const auto& [k, s] : summary) {
    EXPECT_LT(s.median_log10_rot, -8.0) << solver_tag(k);
    EXPECT_GE(s.fraction_rot_below, 0.99) << solver_tag(k);
  }
}

// The harness must flag a solver that is off by a constant rotation.
TEST(Stability, DetectsBrokenSolver) {
  ExperimentOptions o;
  o.n = 50;
  o.solver = [](SolverKind kind, const MinimalSample& s, const SolverOptions& opts) {
    SolverResult r = solve(kind, s, opts);
    for (auto& c : r.candidates) c.rotation = rotation_about_y(1e-3) * c.rotation;
    return r;
  };
  const auto summary = summarize_stability(run_stability_experiment({SolverKind::P5}, o));
  EXPECT_GT(summary.at(SolverKind::P5).median_log10_rot, -4.0);
  EXPECT_LT(summary.at(SolverKind::P5).fraction_rot_below, 0.01);
}

TEST(Noise, CellLayout) {
  ExperimentOptions o;
  o.n = 5;
  NoiseExperimentConfig cfg;
  cfg.kinds = {SolverKind::P5, SolverKind::P3V1};
  cfg.sigmas = {0.0, 1.0, 2.0};
  cfg.lines_per_vp = {3, 10};
  const auto rows = run_noise_experiment(cfg, o);
  // P5: 3 sigmas; P3V1: 3 sigmas x 2 line counts.
  EXPECT_EQ(rows.size(), (3u + 6u) * 5u);
  std::set<std::tuple<SolverKind, double, int>> cells;
  for (const auto& m : rows) {
    EXPECT_EQ(m.experiment, "noise");
    if (m.solver == SolverKind::P5) {
      EXPECT_EQ(m.lines_per_vp, 0);
    }
    EXPECT_EQ(m.pt_lo, 0);
    cells.insert({m.solver, m.sigma, m.lines_per_vp});
  }
  EXPECT_EQ(cells.size(), 9u);
  cfg.sigmas = {-1.0};
  EXPECT_THROW(run_noise_experiment(cfg, o), std::invalid_argument);
}

TEST(Ortho, RowsFollowProtocol) {
  ExperimentOptions o;
  o.n = 10;
  OrthoExperimentConfig cfg;
  cfg.deviations_deg = {0.0, 5.0, 10.0};
  const auto rows = run_orthogonality_experiment(cfg, o);
  ASSERT_EQ(rows.size(), 3u * 3u * 10u);
  for (const auto& m : rows) {
    EXPECT_EQ(m.experiment, "ortho");
    EXPECT_EQ(m.sigma, cfg.sigma);
    EXPECT_EQ(m.lines_per_vp, cfg.lines_per_vp);
    EXPECT_EQ(m.pt_lo, cfg.points_in_lo);
    EXPECT_TRUE(m.solver == SolverKind::P2L1V1Perp || m.solver == SolverKind::P1L2V1Perp ||
                m.solver == SolverKind::P2V1Perp);
  }
  // Minimal-solver errors grow with the deviation from orthogonality. LO is
  // off since it can pull different starts into the same optimum.
  cfg.with_lo = false;
  o.n = 300;
  const auto means = mean_errors(run_orthogonality_experiment(cfg, o));
  for (SolverKind k : kPerpendicularSolvers) {
    const CellMean at0 = means.at({k, cfg.sigma, cfg.lines_per_vp, 0, 0.0});
    const CellMean at10 = means.at({k, cfg.sigma, cfg.lines_per_vp, 0, 10.0});
    EXPECT_LT(at0.rot_err_deg + at0.trans_err_deg, at10.rot_err_deg + at10.trans_err_deg)
        << solver_tag(k);
  }
  cfg.deviations_deg = {50.0};
  EXPECT_THROW(run_orthogonality_experiment(cfg, o), std::invalid_argument);
}

TEST(BestCandidate, EmptyGivesPi) {
  const PoseError e = best_candidate_errors({}, RelativePose{});
  EXPECT_EQ(e.rotation, std::numbers::pi);
  EXPECT_EQ(e.translation, std::numbers::pi);
}

TEST(BestCandidate, AlignsTranslationSign) {
  const RelativePose truth(Mat3::Identity(), Vec3(0, 0, 1));
  RelativePose best;
  const PoseError e =
      best_candidate_errors({RelativePose(Mat3::Identity(), Vec3(0, 0, -1))}, truth, &best);
  EXPECT_EQ(e.translation, 0.0);
  EXPECT_EQ(best.translation, Vec3(0, 0, 1));
}

}  // namespace
}  // namespace relpose
