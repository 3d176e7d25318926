#include "relpose_tools/cli.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "relpose/experiments.h"
#include "relpose/geometry.h"
#include "relpose_tools/pair_file.h"

namespace relpose {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CliRun {
  int code;
  std::string out, err;
};

CliRun run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("relpose_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

void write(const std::string& path, const json& j) { std::ofstream(path) << j.dump(); }

json minimal_pair(int points) {
  json j;
  j["schema_version"] = 1;
  j["intrinsics"] = json::array();
  for (int c = 0; c < 2; ++c) {
    j["intrinsics"].push_back({{"fx", 500.0}, {"fy", 500.0}, {"cx", 320.0}, {"cy", 240.0}, {"skew", 0.0}});
  }
  j["points"] = json::array();
  for (int i = 0; i < points; ++i) {
    j["points"].push_back({{"p", {320.0 + 10 * i, 240.0}}, {"p2", {330.0 + 10 * i, 250.0}}});
  }
  j["lines"] = json::array();
  return j;
}

TEST(PairFile, IngestsAndCalibratesPoints) {
  const PairFile pair = parse_pair_file(minimal_pair(5));
  const CorrespondenceSet data = calibrate(pair);
  ASSERT_EQ(data.points.size(), 5u);
  EXPECT_LT((data.points[0].p - Vec3(0, 0, 1)).norm(), 1e-15);
  EXPECT_LT((data.points[1].p_prime - Vec3(0.04, 0.02, 1)).norm(), 1e-15);
  EXPECT_FALSE(pair.vps);
}

TEST(PairFile, ZeroFocalIsCalibrationError) {
  json j = minimal_pair(5);
  j["intrinsics"][1]["fx"] = 0.0;
  const PairFile pair = parse_pair_file(j);
  EXPECT_THROW(calibrate(pair), CalibrationError);
}

TEST(PairFile, ParseErrorsNameThePath) {
  json j = minimal_pair(5);
  j["points"][3].erase("p2");
  try {
    parse_pair_file(j);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("/points/3/p2", 0), 0u) << e.what();
  }
  json k = minimal_pair(1);
  k["points"][0]["p"] = {1.0};
  EXPECT_THROW(parse_pair_file(k), ParseError);
  json v = minimal_pair(1);
  v["vps"] = {{{"v", {0, 0, 1}}, {"v2", {0, 0, 1}}, {"lines", {3}}}};
  EXPECT_THROW(parse_pair_file(v), ParseError);
  json s = minimal_pair(1);
  s["schema_version"] = 2;
  EXPECT_THROW(parse_pair_file(s), ParseError);
  EXPECT_THROW(load_pair_file("/nonexistent/pair.json"), ParseError);
}

TEST(PairFile, SyntheticRoundTrip) {
  for (int i = 0; i < 10; ++i) {
    PairConfig cfg;
    cfg.instance = i;
    cfg.num_random_lines = 3;
    const SyntheticScene sc = sample_pair(cfg);
    CameraIntrinsics K;
    K.fx = K.fy = cfg.focal;
    K.cx = 640.0;
    K.cy = 360.0;
    const json j = pair_file_to_json(export_scene(sc, {K, K}));
    const PairFile back = parse_pair_file(json::parse(j.dump()));
    const CorrespondenceSet data = calibrate(back, false, false);
    ASSERT_EQ(data.points.size(), sc.data.points.size());
    for (std::size_t k = 0; k < data.points.size(); ++k) {
      EXPECT_LT((data.points[k].p - sc.data.points[k].p).norm(), 1e-12);
      EXPECT_LT((data.points[k].p_prime - sc.data.points[k].p_prime).norm(), 1e-12);
    }
    ASSERT_EQ(data.lines.size(), sc.data.lines.size());
    for (std::size_t k = 0; k < data.lines.size(); ++k) {
      // Line coordinates are rebuilt from endpoints, which loses a few ulps.
      EXPECT_LT((data.lines[k].l - sc.data.lines[k].l).norm(), 1e-10);
      EXPECT_LT((data.lines[k].l_prime - sc.data.lines[k].l_prime).norm(), 1e-10);
      for (int e = 0; e < 2; ++e) {
        EXPECT_LT((data.lines[k].endpoints[e] - sc.data.lines[k].endpoints[e]).norm(), 1e-12);
      }
    }
    ASSERT_EQ(data.vps.size(), sc.data.vps.size());
    for (std::size_t k = 0; k < data.vps.size(); ++k) {
      EXPECT_LT((data.vps[k].v - sc.data.vps[k].v.normalized()).norm(), 1e-12);
      EXPECT_LT((data.vps[k].v_prime - sc.data.vps[k].v_prime.normalized()).norm(), 1e-12);
      EXPECT_EQ(data.vps[k].supporting_lines, sc.data.vps[k].supporting_lines);
      EXPECT_EQ(data.vps[k].oriented, sc.data.vps[k].oriented);
    }
    ASSERT_TRUE(back.ground_truth);
    const PoseError e = pose_errors(*back.ground_truth, sc.gt_pose);
    EXPECT_LT(e.rotation, 1e-12);
    EXPECT_LT(e.translation, 1e-12);
  }
}

TEST(PairFile, QuaternionHasNonNegativeW) {
  for (int i = 0; i < 50; ++i) {
    Rng rng(i);
    const Mat3 R = random_rotation(rng);
    const auto q = to_quaternion(R);
    EXPECT_GE(q[0], 0.0);
    EXPECT_LT((from_quaternion(q) - R).norm(), 1e-14);
  }
}

TEST(Cli, EstimateNoiselessExportedPair) {
  TempDir dir;
  const std::string pair = dir.file("pair.json");
  ASSERT_EQ(run({"synth", "--seed", "5", "--noise-px", "0", "--outliers", "0", "--output", pair}).code,
            kExitOk);
  const CliRun r = run({"estimate", pair, "--seed", "1"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const json j = json::parse(r.out);
  EXPECT_EQ(j["schema_version"], 1);
  const PairFile p = load_pair_file(pair);
  const RelativePose est(from_quaternion(j["pose"]["quaternion"].get<std::array<double, 4>>()),
                         Vec3(j["pose"]["translation"][0], j["pose"]["translation"][1],
                              j["pose"]["translation"][2]));
  const PoseError e = pose_errors(est, *p.ground_truth);
  EXPECT_LT(e.rotation, 1e-4);
  EXPECT_LT(e.translation, 1e-4);
  EXPECT_GE(j["pose"]["quaternion"][0].get<double>(), 0.0);
  EXPECT_TRUE(j["inliers"]["points"].is_array());
  EXPECT_TRUE(j["stats"]["per_solver_stats"].is_object());
}

TEST(Cli, EstimateFitsVPsWhenAbsent) {
  TempDir dir;
  const std::string pair = dir.file("pair.json");
  ASSERT_EQ(run({"synth", "--omit-vps", "--output", pair}).code, kExitOk);
  const CliRun r = run({"estimate", pair});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const json j = json::parse(r.out);
  EXPECT_EQ(j["vps"]["source"], "fitted");
  EXPECT_EQ(j["vps"]["matches"].size(), 2u);
  EXPECT_LT(j["ground_truth_error"]["rotation_rad"].get<double>(), 0.02);
}

TEST(Cli, SolverFlagRestrictsStats) {
  TempDir dir;
  const std::string pair = dir.file("pair.json");
  ASSERT_EQ(run({"synth", "--output", pair}).code, kExitOk);
  const CliRun r = run({"estimate", pair, "--solvers", "P5"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const json stats = json::parse(r.out)["stats"]["per_solver_stats"];
  ASSERT_EQ(stats.size(), 1u);
  EXPECT_TRUE(stats.contains("P5"));
  // Configuration codes are accepted as well.
  EXPECT_EQ(run({"estimate", pair, "--solvers", "5-0-0,2-0-2"}).code, kExitOk);
}

TEST(Cli, ExitCodes) {
  TempDir dir;
  const std::string three = dir.file("three.json");
  write(three, minimal_pair(3));
  EXPECT_EQ(run({"estimate", three, "--solvers", "P5"}).code, kExitInsufficientData);

  const std::string same = dir.file("same.json");
  json s = minimal_pair(0);
  for (int i = 0; i < 6; ++i) s["points"].push_back({{"p", {300.0, 200.0}}, {"p2", {300.0, 200.0}}});
  write(same, s);
  EXPECT_EQ(run({"estimate", same, "--solvers", "P5", "--max-iters", "20"}).code,
            kExitEstimationFailed);

  const std::string fx0 = dir.file("fx0.json");
  json f = minimal_pair(5);
  f["intrinsics"][0]["fx"] = 0.0;
  write(fx0, f);
  EXPECT_EQ(run({"estimate", fx0}).code, kExitUsage);

  const std::string garbage = dir.file("garbage.json");
  std::ofstream(garbage) << "{not json";
  EXPECT_EQ(run({"estimate", garbage}).code, kExitUsage);

  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"estimate"}).code, kExitUsage);
  EXPECT_EQ(run({"estimate", three, "--solvers", "nope"}).code, kExitUsage);
  EXPECT_EQ(run({"estimate", three, "--confidence", "2"}).code, kExitUsage);
  EXPECT_EQ(run({"bench", "noise", "--n", "0"}).code, kExitUsage);
  EXPECT_EQ(run({"bench", "ortho", "--deviations", "60"}).code, kExitUsage);
  EXPECT_EQ(run({"bench", "noise", "--sigmas", "x"}).code, kExitUsage);
  EXPECT_EQ(run({"--help"}).code, kExitOk);
}

TEST(Cli, BenchStabilityIsDeterministic) {
  const CliRun a = run({"bench", "stability", "--n", "50", "--seed", "7"});
  const CliRun b = run({"bench", "stability", "--n", "50", "--seed", "7", "--threads", "3"});
  ASSERT_EQ(a.code, kExitOk);
  EXPECT_EQ(a.out, b.out);
  std::istringstream is(a.out);
  EXPECT_EQ(read_csv(is).size(), 50u * kAllSolvers.size());
}

TEST(Cli, BenchNoiseSigmaLevels) {
  TempDir dir;
  const std::string csv = dir.file("noise.csv");
  ASSERT_EQ(run({"bench", "noise", "--sigmas", "0,1,2", "--n", "20", "--output", csv}).code, kExitOk);
  std::ifstream in(csv);
  const auto rows = read_csv(in);
  std::map<SolverKind, std::set<double>> sigmas;
  for (const auto& m : rows) sigmas[m.solver].insert(m.sigma);
  EXPECT_EQ(sigmas.size(), kAllSolvers.size());
  for (const auto& [k, s] : sigmas) EXPECT_EQ(s, (std::set<double>{0.0, 1.0, 2.0}));
}

TEST(Cli, BenchOrthoWithLO) {
  const CliRun r = run({"bench", "ortho", "--deviations", "0,5,10", "--lo", "--n", "10"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::istringstream is(r.out);
  const auto rows = read_csv(is);
  ASSERT_EQ(rows.size(), 3u * 3u * 10u);
  for (const auto& m : rows) {
    EXPECT_EQ(m.experiment, "ortho");
    EXPECT_GT(m.pt_lo, 0);
    EXPECT_EQ(m.sigma, 1.0);
    EXPECT_EQ(m.lines_per_vp, 10);
  }
}

TEST(Cli, FitVps) {
  TempDir dir;
  const std::string pair = dir.file("pair.json");
  ASSERT_EQ(run({"synth", "--vps", "3", "--points", "0", "--output", pair}).code, kExitOk);
  const CliRun r = run({"fit-vps", pair, "--seed", "2"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const json j = json::parse(r.out);
  EXPECT_EQ(j["vps"].size(), 3u);
  EXPECT_EQ(j["line_labels"].size(), 30u);
}

TEST(Cli, EveryCommandIsDeterministic) {
  TempDir dir;
  const std::string pair = dir.file("pair.json");
  const CliRun s1 = run({"synth", "--seed", "9", "--omit-vps"});
  const CliRun s2 = run({"synth", "--seed", "9", "--omit-vps"});
  EXPECT_EQ(s1.out, s2.out);
  std::ofstream(pair) << s1.out;
  EXPECT_EQ(run({"estimate", pair, "--seed", "3"}).out, run({"estimate", pair, "--seed", "3"}).out);
  EXPECT_EQ(run({"fit-vps", pair, "--seed", "3"}).out, run({"fit-vps", pair, "--seed", "3"}).out);
}

}  // namespace
}  // namespace relpose
