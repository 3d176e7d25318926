#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "relpose/correspondences.h"
#include "relpose/synthetic.h"
#include "relpose/types.h"

namespace relpose {

// Malformed pair file. The message starts with the JSON path of the offending
// field, e.g. "/points/3/p2: expected an array of 2 numbers".
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Intrinsic matrix that cannot be inverted.
class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PixelLine {
  Vec2 a, b;    // image 1
  Vec2 a2, b2;  // image 2
};

// Homogeneous pixel coordinates.
struct PixelVP {
  Vec3 v, v2;
  std::vector<int> lines;
};

// Image-space content of a pair file.
struct PairFile {
  static constexpr int kSchemaVersion = 1;

  std::array<CameraIntrinsics, 2> intrinsics{};
  std::vector<std::array<Vec2, 2>> points;
  std::vector<PixelLine> lines;
  std::optional<std::vector<PixelVP>> vps;
  std::optional<RelativePose> ground_truth;
};

PairFile parse_pair_file(const nlohmann::json& j);
// Throws ParseError when the file cannot be read or parsed.
PairFile load_pair_file(const std::filesystem::path& path);

nlohmann::json pair_file_to_json(const PairFile& pair);

// Calibrates every entity with the inverse intrinsics. Lines are rebuilt from
// the calibrated endpoints, loaded VPs are normalized and oriented by their
// first supporting line. Junctions and endpoints are derived when requested.
// Throws CalibrationError.
CorrespondenceSet calibrate(const PairFile& pair, bool junctions = true, bool endpoints = true);

// Pixel-space export of a synthetic scene with its ground truth pose.
PairFile export_scene(const SyntheticScene& scene, const std::array<CameraIntrinsics, 2>& K);

// Quaternion (w, x, y, z) with w >= 0.
std::array<double, 4> to_quaternion(const Mat3& R);
Mat3 from_quaternion(const std::array<double, 4>& q);

}  // namespace relpose
