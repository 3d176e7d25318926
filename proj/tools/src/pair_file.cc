#include "relpose_tools/pair_file.h"

#include <cmath>
#include <fstream>

#include "relpose/vp_estimation.h"

namespace relpose {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ParseError(path + ": " + what);
}

const json& field(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(path + "/" + key, "missing field");
  return *it;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) fail(path, "not finite");
  return x;
}

template <int N>
Eigen::Matrix<double, N, 1> vec(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != N) {
    fail(path, "expected an array of " + std::to_string(N) + " numbers");
  }
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) v(i) = number(j[i], path + "/" + std::to_string(i));
  return v;
}

const json& array(const json& obj, const std::string& key, const std::string& path) {
  const json& a = field(obj, key, path);
  if (!a.is_array()) fail(path + "/" + key, "expected an array");
  return a;
}

template <typename Derived>
json to_array(const Eigen::MatrixBase<Derived>& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

}  // namespace

PairFile parse_pair_file(const json& j) {
  PairFile pair;
  const json& version = field(j, "schema_version", "");
  if (!version.is_number_integer() || version.get<int>() != PairFile::kSchemaVersion) {
    fail("/schema_version", "unsupported version");
  }

  const json& intr = array(j, "intrinsics", "");
  if (intr.size() != 2) fail("/intrinsics", "expected 2 entries");
  for (int c = 0; c < 2; ++c) {
    const std::string p = "/intrinsics/" + std::to_string(c);
    CameraIntrinsics& K = pair.intrinsics[c];
    K.fx = number(field(intr[c], "fx", p), p + "/fx");
    K.fy = number(field(intr[c], "fy", p), p + "/fy");
    K.cx = number(field(intr[c], "cx", p), p + "/cx");
    K.cy = number(field(intr[c], "cy", p), p + "/cy");
    K.skew = number(field(intr[c], "skew", p), p + "/skew");
  }

  const json& points = array(j, "points", "");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const std::string p = "/points/" + std::to_string(i);
    pair.points.push_back(
        {vec<2>(field(points[i], "p", p), p + "/p"), vec<2>(field(points[i], "p2", p), p + "/p2")});
  }

  const json& lines = array(j, "lines", "");
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string p = "/lines/" + std::to_string(i);
    const json& l = lines[i];
    pair.lines.push_back({vec<2>(field(l, "a", p), p + "/a"), vec<2>(field(l, "b", p), p + "/b"),
                          vec<2>(field(l, "a2", p), p + "/a2"),
                          vec<2>(field(l, "b2", p), p + "/b2")});
  }

  if (j.contains("vps")) {
    const json& vps = array(j, "vps", "");
    pair.vps.emplace();
    for (std::size_t i = 0; i < vps.size(); ++i) {
      const std::string p = "/vps/" + std::to_string(i);
      PixelVP vp{vec<3>(field(vps[i], "v", p), p + "/v"), vec<3>(field(vps[i], "v2", p), p + "/v2"),
                 {}};
      if (vp.v.norm() == 0.0) fail(p + "/v", "zero vector");
      if (vp.v2.norm() == 0.0) fail(p + "/v2", "zero vector");
      const json& idx = array(vps[i], "lines", p);
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const std::string q = p + "/lines/" + std::to_string(k);
        if (!idx[k].is_number_integer()) fail(q, "expected an integer");
        const long n = idx[k].get<long>();
        if (n < 0 || n >= static_cast<long>(pair.lines.size())) fail(q, "line index out of range");
        vp.lines.push_back(static_cast<int>(n));
      }
      pair.vps->push_back(std::move(vp));
    }
  }

  if (j.contains("ground_truth")) {
    const json& gt = j["ground_truth"];
    const Eigen::Vector4d q = vec<4>(field(gt, "quaternion", "/ground_truth"),
                                     "/ground_truth/quaternion");
    const Vec3 t = vec<3>(field(gt, "translation", "/ground_truth"), "/ground_truth/translation");
    if (q.norm() == 0.0) fail("/ground_truth/quaternion", "zero quaternion");
    if (t.norm() == 0.0) fail("/ground_truth/translation", "zero translation");
    pair.ground_truth = RelativePose(from_quaternion({q(0), q(1), q(2), q(3)}), t);
  }
  return pair;
}

PairFile load_pair_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open file");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return parse_pair_file(j);
}

json pair_file_to_json(const PairFile& pair) {
  json j;
  j["schema_version"] = PairFile::kSchemaVersion;
  j["intrinsics"] = json::array();
  for (const CameraIntrinsics& K : pair.intrinsics) {
    j["intrinsics"].push_back(
        {{"fx", K.fx}, {"fy", K.fy}, {"cx", K.cx}, {"cy", K.cy}, {"skew", K.skew}});
  }
  j["points"] = json::array();
  for (const auto& m : pair.points) {
    j["points"].push_back({{"p", to_array(m[0])}, {"p2", to_array(m[1])}});
  }
  j["lines"] = json::array();
  for (const PixelLine& l : pair.lines) {
    j["lines"].push_back({{"a", to_array(l.a)},
                          {"b", to_array(l.b)},
                          {"a2", to_array(l.a2)},
                          {"b2", to_array(l.b2)}});
  }
  if (pair.vps) {
    j["vps"] = json::array();
    for (const PixelVP& vp : *pair.vps) {
      j["vps"].push_back({{"v", to_array(vp.v)}, {"v2", to_array(vp.v2)}, {"lines", vp.lines}});
    }
  }
  if (pair.ground_truth) {
    j["ground_truth"] = {{"quaternion", to_quaternion(pair.ground_truth->rotation)},
                         {"translation", to_array(pair.ground_truth->translation)}};
  }
  return j;
}

CorrespondenceSet calibrate(const PairFile& pair, bool junctions, bool endpoints) {
  std::array<Mat3, 2> Kinv;
  for (int c = 0; c < 2; ++c) {
    const auto inv = pair.intrinsics[c].inverse();
    if (!inv) {
      throw CalibrationError("intrinsics " + std::to_string(c) + " are not invertible");
    }
    Kinv[c] = *inv;
  }
  const auto& K = pair.intrinsics;

  CorrespondenceSet data;
  for (const auto& m : pair.points) {
    data.points.emplace_back(K[0].to_calibrated(m[0]), K[1].to_calibrated(m[1]));
  }
  for (const PixelLine& l : pair.lines) {
    data.lines.push_back(LineMatch::from_endpoints(
        K[0].to_calibrated(l.a).head<2>(), K[0].to_calibrated(l.b).head<2>(),
        K[1].to_calibrated(l.a2).head<2>(), K[1].to_calibrated(l.b2).head<2>()));
  }
  if (pair.vps) {
    for (const PixelVP& vp : *pair.vps) {
      VPMatch vm;
      vm.v = (Kinv[0] * vp.v).normalized();
      vm.v_prime = (Kinv[1] * vp.v2).normalized();
      vm.supporting_lines = vp.lines;
      if (!vp.lines.empty()) {
        const LineMatch& first = data.lines[vp.lines.front()];
        vm.oriented[0] = orient_vp(vm.v, first.endpoints);
        vm.oriented[1] = orient_vp(vm.v_prime, first.endpoints_prime);
      }
      data.vps.push_back(std::move(vm));
    }
  }
  if (junctions) derive_junctions(data);
  if (endpoints) derive_endpoints(data);
  return data;
}

PairFile export_scene(const SyntheticScene& scene, const std::array<CameraIntrinsics, 2>& K) {
  PairFile pair;
  pair.intrinsics = K;
  const CorrespondenceSet& d = scene.data;
  for (const PointMatch& m : d.points) {
    pair.points.push_back({K[0].to_pixel(m.p), K[1].to_pixel(m.p_prime)});
  }
  for (const LineMatch& l : d.lines) {
    pair.lines.push_back({K[0].to_pixel(l.endpoints[0]), K[0].to_pixel(l.endpoints[1]),
                          K[1].to_pixel(l.endpoints_prime[0]),
                          K[1].to_pixel(l.endpoints_prime[1])});
  }
  if (!d.vps.empty()) {
    pair.vps.emplace();
    for (const VPMatch& vm : d.vps) {
      pair.vps->push_back(
          {K[0].matrix() * vm.v, K[1].matrix() * vm.v_prime, vm.supporting_lines});
    }
  }
  pair.ground_truth = scene.gt_pose;
  return pair;
}

std::array<double, 4> to_quaternion(const Mat3& R) {
  Eigen::Quaterniond q(R);
  q.normalize();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  return {q.w(), q.x(), q.y(), q.z()};
}

Mat3 from_quaternion(const std::array<double, 4>& q) {
  return Eigen::Quaterniond(q[0], q[1], q[2], q[3]).normalized().toRotationMatrix();
}

}  // namespace relpose
