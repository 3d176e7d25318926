#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "relpose/types.h"

namespace relpose {

// The thirteen minimal configurations, named X-Y-Z for X points, Y lines and
// Z vanishing points; "perp" marks a line orthogonal to the VP direction.
enum class SolverKind {
  P5,          // 5-0-0
  P4H,         // 4-0-0, coplanar points
  P3L1H,       // 3-1-0, coplanar
  P2L2H,       // 2-2-0, coplanar
  P1L3H,       // 1-3-0, coplanar
  L4H,         // 0-4-0, coplanar lines
  P2L3,        // 2-3-0, three coplanar lines
  P3V1,        // 3-0-1
  L3V1,        // 0-3-1, three coplanar lines
  P2V2,        // 2-0-2
  P2L1V1Perp,  // 2-1-1 perp
  P1L2V1Perp,  // 1-2-1 perp, the first line is orthogonal and meets the second
  P2V1Perp,    // 2-0-1 perp, the line through both points is orthogonal
};

inline constexpr std::array<SolverKind, 13> kAllSolvers = {
    SolverKind::P5,         SolverKind::P4H,        SolverKind::P3L1H, SolverKind::P2L2H,
    SolverKind::P1L3H,      SolverKind::L4H,        SolverKind::P2L3,  SolverKind::P3V1,
    SolverKind::L3V1,       SolverKind::P2V2,       SolverKind::P2L1V1Perp,
    SolverKind::P1L2V1Perp, SolverKind::P2V1Perp};

struct SampleSize {
  int points = 0;
  int lines = 0;
  int vps = 0;
};

SampleSize sample_size(SolverKind kind);
// Short tag ("P5", "P2L1V1Perp", ...) used on the command line and in CSV files.
std::string_view solver_tag(SolverKind kind);
// Configuration code ("5-0-0", "2-1-1perp", ...).
std::string_view solver_code(SolverKind kind);
// Accepts either the tag or the configuration code.
std::optional<SolverKind> parse_solver(std::string_view text);
bool uses_vps(SolverKind kind);

enum class SolverStatus {
  kOk,
  kDegenerateSample,
  kNearParallel,
  kParallelVPs,
  kRankDeficientA,
  kNoRealRoot,
  kCoincidentPoints,
  kInvalidInput,
};

std::string_view status_name(SolverStatus status);

struct SolverResult {
  SolverKind solver = SolverKind::P5;
  SolverStatus status = SolverStatus::kOk;
  std::vector<RelativePose> candidates;

  bool ok() const { return status == SolverStatus::kOk; }
};

struct SolverOptions {
  // Sign systems of the two-VP rotation whose orthonormality error
  // |R^T R - I| (max abs entry) exceeds this are discarded. Noisy VPs need a
  // looser value than exact data.
  double vp_rotation_tolerance = 1e-6;
  // Imaginary-part tolerance when accepting near-real polynomial roots.
  double imag_tolerance = 1e-10;
  GeometryTolerances geometry{};
};

// Candidate-count bounds per call.
inline constexpr int kMaxFivePointCandidates = 10;
inline constexpr int kMaxUprightSolutions = 4;
inline constexpr int kMaxTwoVPCandidates = 4;
inline constexpr int kMaxHomographyCandidates = 4;

// Five generic point matches. One pose per real essential matrix; the twisted
// pair of each essential matrix is resolved by the depths of the sample.
SolverResult solve_5pc(std::span<const PointMatch> points, const SolverOptions& opts = {});

// Coplanar points and lines with points + lines == 4. Mixed DLT followed by
// the homography decomposition.
SolverResult solve_homography_family(std::span<const PointMatch> points,
                                     std::span<const LineMatch> lines,
                                     const SolverOptions& opts = {});

// Three pairs already rotated so the common axis is the y-axis.
struct UprightProblem {
  std::array<Vec3, 3> q;
  std::array<Vec3, 3> q_prime;
  Mat3 rx = Mat3::Identity();
  Mat3 rx_prime = Mat3::Identity();
};

struct UprightSolution {
  double yaw = 0.0;  // phi of R_y(phi)
  Vec3 translation = Vec3::UnitX();
};

// R_y(phi) = [cos 0 -sin; 0 1 0; sin 0 cos].
Mat3 rotation_about_y(double phi);

// Solves q'_i^T [t']x R_y(phi) q_i = 0 for i = 1..3 via a quartic in
// tan(phi / 2). Empty when there is no real root.
std::vector<UprightSolution> solve_upright_3pt(const UprightProblem& problem,
                                               const SolverOptions& opts = {});

SolverResult solve_3_0_1(std::span<const PointMatch> points, const VPMatch& vp,
                         const SolverOptions& opts = {});
SolverResult solve_0_3_1(std::span<const LineMatch> lines, const VPMatch& vp,
                         const SolverOptions& opts = {});
SolverResult solve_2_0_2(std::span<const PointMatch> points, std::span<const VPMatch> vps,
                         const SolverOptions& opts = {});
SolverResult solve_2_1_1_perp(std::span<const PointMatch> points, const LineMatch& line,
                              const VPMatch& vp, const SolverOptions& opts = {});
SolverResult solve_1_2_1_perp(const PointMatch& point, std::span<const LineMatch> lines,
                              const VPMatch& vp, const SolverOptions& opts = {});
SolverResult solve_2_0_1_perp(std::span<const PointMatch> points, const VPMatch& vp,
                              const SolverOptions& opts = {});
SolverResult solve_2_3_0(std::span<const PointMatch> points, std::span<const LineMatch> lines,
                         const SolverOptions& opts = {});

// Entities of one minimal sample, in the order the solver expects them.
struct MinimalSample {
  std::vector<PointMatch> points;
  std::vector<LineMatch> lines;
  std::vector<VPMatch> vps;
};

SolverResult solve(SolverKind kind, const MinimalSample& sample, const SolverOptions& opts = {});

// Unit 3D direction (camera-1 frame, sign arbitrary) of a line match given
// the rotation: the meet of its two back-projected planes. The translation
// does not enter.
Vec3 line_direction(const Mat3& R, const LineMatch& line);

// Deviation in radians from 90 degrees between the 3D direction of the line,
// reconstructed with the rotation of `pose`, and the VP direction.
double orthogonality_deviation(const RelativePose& pose, const LineMatch& line,
                               const VPMatch& vp);

// Homography helpers shared by the homography family.
std::optional<Mat3> estimate_homography(std::span<const PointMatch> points,
                                        std::span<const LineMatch> lines);

struct HomographyDecomposition {
  Mat3 rotation;
  Vec3 translation;  // scaled by the inverse plane distance
  Vec3 normal;       // unit plane normal, H ~ R + t n^T
};

// All decompositions of H ~ R + t n^T, for the given overall sign of H.
std::vector<HomographyDecomposition> decompose_homography(const Mat3& H);

}  // namespace relpose
