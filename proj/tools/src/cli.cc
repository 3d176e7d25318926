#include "relpose_tools/cli.h"

#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "relpose/experiments.h"
#include "relpose/geometry.h"
#include "relpose/hybrid_ransac.h"
#include "relpose/synthetic.h"
#include "relpose/vp_estimation.h"
#include "relpose_tools/pair_file.h"

namespace relpose {

namespace {

using nlohmann::json;

constexpr double kDeg = std::numbers::pi / 180.0;

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

std::vector<SolverKind> parse_solvers(const std::vector<std::string>& names) {
  std::vector<SolverKind> kinds;
  for (const std::string& n : names) {
    const auto k = parse_solver(n);
    if (!k) throw CLI::ValidationError("--solvers", "unknown solver '" + n + "'");
    kinds.push_back(*k);
  }
  return kinds;
}

// Writes to --output when given, else to `out`.
void emit(const std::string& path, std::ostream& out, const std::string& text) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json vps_json(const std::vector<VPMatch>& vps) {
  json a = json::array();
  for (const VPMatch& vm : vps) {
    a.push_back({{"v", vec_json(vm.v)},
                 {"v2", vec_json(vm.v_prime)},
                 {"lines", vm.supporting_lines},
                 {"oriented", vm.has_sign_hint()}});
  }
  return a;
}

VPFitConfig vp_fit_config(const PairFile& pair, std::uint64_t seed, double thresh_px) {
  VPFitConfig vc;
  vc.intrinsics = pair.intrinsics;
  vc.rng_seed = seed;
  vc.inlier_threshold = thresh_px;
  return vc;
}

std::vector<VPMatch> fit_vps(const CorrespondenceSet& data, const VPFitConfig& vc) {
  std::vector<VPMatch> vps;
  for (const VPModel& m : fit_vps_jointly(data.lines, vc)) {
    vps.push_back(to_vp_match(m, data.lines));
  }
  return vps;
}

struct EstimateArgs {
  std::string pair;
  std::string output;
  std::vector<std::string> solvers;
  std::uint64_t seed = 0;
  double confidence = 0.9999;
  double point_thresh_px = 1.5;
  double vp_thresh_deg = 2.0;
  bool no_junctions = false;
  bool no_endpoints = false;
  int max_iters = 5000;
  double vp_fit_thresh_px = 2.0;
};

int cmd_estimate(const EstimateArgs& a, std::ostream& out) {
  const PairFile pair = load_pair_file(a.pair);
  CorrespondenceSet data = calibrate(pair, !a.no_junctions, !a.no_endpoints);
  const bool fitted = !pair.vps.has_value();
  if (fitted) data.vps = fit_vps(data, vp_fit_config(pair, a.seed, a.vp_fit_thresh_px));

  RansacConfig cfg;
  const double focal =
      0.5 * (pair.intrinsics[0].mean_focal() + pair.intrinsics[1].mean_focal());
  cfg.point_threshold = a.point_thresh_px / focal;
  cfg.vp_threshold = a.vp_thresh_deg * kDeg;
  cfg.confidence = a.confidence;
  cfg.max_iterations = a.max_iters;
  cfg.rng_seed = a.seed;
  cfg.use_junctions = !a.no_junctions;
  cfg.use_endpoints = !a.no_endpoints;
  if (!a.solvers.empty()) cfg.enabled_solvers = parse_solvers(a.solvers);
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw CLI::ValidationError(e.what());
  }

  const RansacReport rep = run_hybrid_ransac(data, cfg);

  json stats = json::object();
  for (const auto& [kind, s] : rep.per_solver_stats) {
    stats[std::string(solver_tag(kind))] = {
        {"draws", s.draws}, {"successes", s.successes}, {"best_score", s.best_score}};
  }
  const auto q = to_quaternion(rep.best_pose.rotation);
  json j;
  j["schema_version"] = 1;
  j["pose"] = {{"quaternion", q},
               {"translation", vec_json(rep.best_pose.translation)},
               {"pure_rotation", rep.best_pose.pure_rotation}};
  j["inliers"] = {{"points", rep.point_inliers}, {"vps", rep.vp_inliers}};
  j["pool"] = {{"size", rep.pool_size},
               {"points", data.points.size()},
               {"junctions", cfg.use_junctions ? data.junction_points.size() : 0},
               {"endpoints", cfg.use_endpoints ? data.endpoint_points.size() : 0}};
  j["vps"] = {{"source", fitted ? "fitted" : "file"}, {"matches", vps_json(data.vps)}};
  j["stats"] = {{"score", rep.score},
                {"iterations", rep.iterations},
                {"terminated_by",
                 rep.terminated_by == Termination::kConfidence ? "confidence" : "max_iterations"},
                {"best_solver", solver_tag(rep.best_solver)},
                {"per_solver_stats", stats}};
  if (pair.ground_truth) {
    const PoseError e = pose_errors(rep.best_pose, *pair.ground_truth);
    j["ground_truth_error"] = {{"rotation_rad", e.rotation}, {"translation_rad", e.translation}};
  }
  emit(a.output, out, dump(j));
  return kExitOk;
}

struct FitVpsArgs {
  std::string pair;
  std::string output;
  std::uint64_t seed = 0;
  double thresh_px = 2.0;
  int min_support = 4;
  int max_models = 8;
};

int cmd_fit_vps(const FitVpsArgs& a, std::ostream& out) {
  const PairFile pair = load_pair_file(a.pair);
  const CorrespondenceSet data = calibrate(pair, false, false);
  VPFitConfig vc = vp_fit_config(pair, a.seed, a.thresh_px);
  vc.min_support = a.min_support;
  vc.max_models = a.max_models;
  const std::vector<VPModel> models = fit_vps_jointly(data.lines, vc);

  std::vector<int> labels(data.lines.size(), -1);
  json vps = json::array();
  for (std::size_t i = 0; i < models.size(); ++i) {
    const VPMatch vm = to_vp_match(models[i], data.lines);
    for (int l : vm.supporting_lines) labels[l] = static_cast<int>(i);
    vps.push_back({{"v", vec_json(vm.v)},
                   {"v2", vec_json(vm.v_prime)},
                   {"v_px", vec_json(pair.intrinsics[0].matrix() * vm.v)},
                   {"v2_px", vec_json(pair.intrinsics[1].matrix() * vm.v_prime)},
                   {"lines", vm.supporting_lines},
                   {"cost", tardif_cost(vm.v, data.lines, vm.supporting_lines, 0, pair.intrinsics[0]) +
                                tardif_cost(vm.v_prime, data.lines, vm.supporting_lines, 1,
                                            pair.intrinsics[1])}});
  }
  json j;
  j["schema_version"] = 1;
  j["vps"] = vps;
  j["line_labels"] = labels;
  emit(a.output, out, dump(j));
  return kExitOk;
}

struct BenchArgs {
  std::string output;
  int n = 1000;
  std::uint64_t seed = 0;
  int threads = 0;
  std::vector<std::string> solvers;
  std::vector<double> sigmas{0.0, 0.5, 1.0, 2.0};
  std::vector<int> lines_per_vp{10};
  bool lo = false;
  std::vector<int> pt_lo;
  std::vector<double> deviations{0.0, 2.0, 4.0, 6.0, 8.0, 10.0};
  double sigma = 1.0;
  double deviation = 0.0;
};

int cmd_bench(const std::string& which, const BenchArgs& a, std::ostream& out) {
  ExperimentOptions opts;
  opts.seed = a.seed;
  opts.n = a.n;
  opts.threads = a.threads;
  if (a.n < 1) throw CLI::ValidationError("--n", "must be positive");

  std::vector<Measurement> rows;
  if (which == "stability") {
    std::vector<SolverKind> kinds{kAllSolvers.begin(), kAllSolvers.end()};
    if (!a.solvers.empty()) kinds = parse_solvers(a.solvers);
    rows = run_stability_experiment(kinds, opts);
  } else if (which == "noise") {
    NoiseExperimentConfig cfg;
    if (!a.solvers.empty()) cfg.kinds = parse_solvers(a.solvers);
    cfg.sigmas = a.sigmas;
    cfg.lines_per_vp = a.lines_per_vp;
    cfg.with_lo = a.lo;
    if (!a.pt_lo.empty()) cfg.points_in_lo = a.pt_lo;
    cfg.deviation_deg = a.deviation;
    rows = run_noise_experiment(cfg, opts);
  } else {
    OrthoExperimentConfig cfg;
    cfg.deviations_deg = a.deviations;
    cfg.sigma = a.sigma;
    if (a.lines_per_vp.size() != 1) {
      throw CLI::ValidationError("--lines-per-vp", "ortho takes a single value");
    }
    cfg.lines_per_vp = a.lines_per_vp.front();
    cfg.with_lo = a.lo;
    if (a.pt_lo.size() > 1) throw CLI::ValidationError("--pt-lo", "ortho takes a single value");
    if (!a.pt_lo.empty()) cfg.points_in_lo = a.pt_lo.front();
    rows = run_orthogonality_experiment(cfg, opts);
  }
  std::ostringstream csv;
  write_csv(csv, rows);
  emit(a.output, out, csv.str());
  return kExitOk;
}

struct SynthArgs {
  std::string output;
  std::uint64_t seed = 0;
  std::uint64_t instance = 0;
  PairConfig cfg;
  bool omit_vps = false;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  PairConfig cfg = a.cfg;
  cfg.seed = a.seed;
  cfg.instance = a.instance;
  if (cfg.num_points < 0 || cfg.num_vps < 0 || cfg.num_vps > 3 || cfg.lines_per_vp < 2 ||
      !(cfg.outlier_ratio >= 0.0 && cfg.outlier_ratio <= 1.0) || !(cfg.noise_px >= 0.0) ||
      !(cfg.focal > 0.0)) {
    throw CLI::ValidationError("synth", "invalid scene parameters");
  }
  const SyntheticScene scene = sample_pair(cfg);
  CameraIntrinsics K;
  K.fx = K.fy = cfg.focal;
  PairFile pair = export_scene(scene, {K, K});
  if (a.omit_vps) pair.vps.reset();
  emit(a.output, out, dump(pair_file_to_json(pair)));
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Calibrated two-view relative pose from points, lines and vanishing points",
               "relpose"};
  app.require_subcommand(1);

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "Estimate the relative pose of a pair file");
  estimate->add_option("pair", est.pair, "Pair file (JSON)")->required();
  estimate->add_option("--solvers", est.solvers, "Enabled solvers, comma separated")
      ->delimiter(',');
  estimate->add_option("--seed", est.seed, "RNG seed");
  estimate->add_option("--confidence", est.confidence, "RANSAC confidence")
      ->check(CLI::Range(0.0, 1.0));
  estimate->add_option("--point-thresh-px", est.point_thresh_px, "Sampson threshold in pixels")
      ->check(CLI::PositiveNumber);
  estimate->add_option("--vp-thresh-deg", est.vp_thresh_deg, "VP angular threshold in degrees")
      ->check(CLI::PositiveNumber);
  estimate->add_option("--vp-fit-thresh-px", est.vp_fit_thresh_px,
                       "Line inlier threshold of the VP fit in pixels")
      ->check(CLI::PositiveNumber);
  estimate->add_flag("--no-junctions", est.no_junctions, "Do not derive line junctions");
  estimate->add_flag("--no-endpoints", est.no_endpoints, "Do not use segment endpoints");
  estimate->add_option("--max-iters", est.max_iters, "RANSAC iteration cap")
      ->check(CLI::PositiveNumber);
  estimate->add_option("--output", est.output, "Write the JSON report here");

  FitVpsArgs fit;
  auto* fit_vps_cmd = app.add_subcommand("fit-vps", "Fit vanishing points to the lines of a pair");
  fit_vps_cmd->add_option("pair", fit.pair, "Pair file (JSON)")->required();
  fit_vps_cmd->add_option("--seed", fit.seed, "RNG seed");
  fit_vps_cmd->add_option("--thresh-px", fit.thresh_px, "Line inlier threshold in pixels")
      ->check(CLI::PositiveNumber);
  fit_vps_cmd->add_option("--min-support", fit.min_support, "Minimum lines per VP")
      ->check(CLI::Range(2, 1 << 20));
  fit_vps_cmd->add_option("--max-models", fit.max_models, "Maximum number of VPs")
      ->check(CLI::PositiveNumber);
  fit_vps_cmd->add_option("--output", fit.output, "Write the JSON result here");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Synthetic benchmarks, CSV output");
  bench_cmd->require_subcommand(1);
  auto add_common = [&](CLI::App* c) {
    c->add_option("--n", bench.n, "Instances per cell");
    c->add_option("--seed", bench.seed, "Base seed");
    c->add_option("--threads", bench.threads, "Worker threads (0 = RELPOSE_THREADS or all)")
        ->check(CLI::NonNegativeNumber);
    c->add_option("--output", bench.output, "Write the CSV here");
  };
  auto* stability = bench_cmd->add_subcommand("stability", "Noiseless solver stability");
  add_common(stability);
  stability->add_option("--solvers", bench.solvers, "Solvers, comma separated")->delimiter(',');

  auto* noise = bench_cmd->add_subcommand("noise", "Error as a function of image noise");
  add_common(noise);
  noise->add_option("--solvers", bench.solvers, "Solvers, comma separated")->delimiter(',');
  noise->add_option("--sigmas", bench.sigmas, "Noise levels in pixels")->delimiter(',');
  noise->add_option("--lines-per-vp", bench.lines_per_vp, "Lines per VP")->delimiter(',');
  noise->add_flag("--lo", bench.lo, "Refine with extra points");
  noise->add_option("--pt-lo", bench.pt_lo, "Extra points used by --lo")->delimiter(',');
  noise->add_option("--deviation", bench.deviation, "Orthogonality deviation in degrees");

  auto* ortho = bench_cmd->add_subcommand("ortho", "Perpendicular solvers under non-orthogonality");
  add_common(ortho);
  ortho->add_option("--deviations", bench.deviations, "Deviations in degrees")->delimiter(',');
  ortho->add_option("--sigma", bench.sigma, "Noise in pixels")->check(CLI::NonNegativeNumber);
  ortho->add_option("--lines-per-vp", bench.lines_per_vp, "Lines per VP");
  ortho->add_flag("--lo", bench.lo, "Refine with extra points");
  ortho->add_option("--pt-lo", bench.pt_lo, "Extra points used by --lo");

  SynthArgs syn;
  auto* synth = app.add_subcommand("synth", "Write a synthetic pair file with its ground truth");
  synth->add_option("--seed", syn.seed, "Seed");
  synth->add_option("--instance", syn.instance, "Instance index");
  synth->add_option("--points", syn.cfg.num_points, "Point matches");
  synth->add_option("--outliers", syn.cfg.outlier_ratio, "Outlier ratio of the points");
  synth->add_option("--noise-px", syn.cfg.noise_px, "Noise in pixels");
  synth->add_option("--vps", syn.cfg.num_vps, "Planted VPs (0 to 3)");
  synth->add_option("--lines-per-vp", syn.cfg.lines_per_vp, "Lines per VP");
  synth->add_option("--random-lines", syn.cfg.num_random_lines, "Lines without a VP");
  synth->add_option("--focal", syn.cfg.focal, "Focal length in pixels");
  synth->add_flag("--omit-vps", syn.omit_vps, "Leave VPs out so estimate fits them");
  synth->add_option("--output", syn.output, "Write the pair file here");

  // CLI11 expects the arguments in reverse order.
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (estimate->parsed()) return cmd_estimate(est, out);
    if (fit_vps_cmd->parsed()) return cmd_fit_vps(fit, out);
    if (synth->parsed()) return cmd_synth(syn, out);
    for (auto* c : {stability, noise, ortho}) {
      if (c->parsed()) return cmd_bench(c->get_name(), bench, out);
    }
  } catch (const InsufficientData& e) {
    err << "insufficient data: " << e.what() << "\n";
    return kExitInsufficientData;
  } catch (const EstimationFailed& e) {
    err << "estimation failed: " << e.what() << "\n";
    return kExitEstimationFailed;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const CalibrationError& e) {
    err << "calibration error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const CLI::Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace relpose
