#include "relpose/synthetic.h"

#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "relpose/geometry.h"
#include "relpose/vp_estimation.h"

namespace relpose {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

Vec3 normal3(Rng& rng) {
  const double x = normal(rng), y = normal(rng), z = normal(rng);
  return {x, y, z};
}

struct Segment3 {
  Vec3 a, b;
};

// Projection of one scene into both cameras with depth and length checks.
class Cameras {
 public:
  Cameras(const Mat3& R, const Vec3& t) : R_(R), t_(t) {}

  bool project(const Vec3& X, Vec3& p, Vec3& q) const {
    const Vec3 Y = R_ * X + t_;
    if (X.z() < kMinDepth || Y.z() < kMinDepth) return false;
    p = X / X.z();
    q = Y / Y.z();
    return true;
  }

  bool valid_segment(const Segment3& s) const {
    Vec3 pa, qa, pb, qb;
    if (!project(s.a, pa, qa) || !project(s.b, pb, qb)) return false;
    return (pa - pb).norm() >= kMinSegmentLength && (qa - qb).norm() >= kMinSegmentLength;
  }

 private:
  Mat3 R_;
  Vec3 t_;
};

class NoiseSource {
 public:
  NoiseSource(std::uint64_t seed, double sigma) : rng_(seed), sigma_(sigma) {}

  // Always draws, so the random sequence does not depend on sigma.
  Vec3 perturb(const Vec3& p) {
    const double dx = normal(rng_), dy = normal(rng_);
    return {p.x() + sigma_ * dx, p.y() + sigma_ * dy, 1.0};
  }

 private:
  Rng rng_;
  double sigma_;
};

class Builder {
 public:
  Builder(const SceneConfig& cfg, SyntheticScene& scene, Rng& geo)
      : cfg_(cfg),
        scene_(scene),
        geo_(geo),
        noise_(stream_seed(cfg.rng_seed, cfg.instance, RngStream::kNoise),
               cfg.noise_sigma / cfg.focal) {
    scene_.rotation = random_rotation(geo_);
    const Vec3 C = normal3(geo_);
    scene_.raw_translation = -scene_.rotation * C;
    scene_.gt_pose = RelativePose(scene_.rotation, scene_.raw_translation);
    scene_.provenance.noise_sigma = cfg.noise_sigma / cfg.focal;
    cams_.emplace(scene_.rotation, scene_.raw_translation);
  }

  Rng& geo() { return geo_; }
  const Cameras& cams() const { return *cams_; }

  Vec3 random_point3(Rng& rng) const {
    return Vec3(0.0, 0.0, cfg_.point_mean_depth) + cfg_.point_std * normal3(rng);
  }

  // Retries `draw` until `accept` holds, up to the resample limit.
  template <typename T, typename Draw, typename Accept>
  T retry(Draw draw, Accept accept) {
    T value = draw();
    for (int k = 0; k < kMaxResamples && !accept(value); ++k) {
      ++scene_.provenance.resamples;
      value = draw();
    }
    if (!accept(value)) scene_.provenance.exhausted = true;
    return value;
  }

  Vec3 valid_point(Rng& rng) {
    return retry<Vec3>([&] { return random_point3(rng); },
                       [&](const Vec3& X) {
                         Vec3 p, q;
                         return cams().project(X, p, q);
                       });
  }

  Segment3 line_with_direction(Rng& rng, const Vec3& d) {
    return retry<Segment3>(
        [&] {
          const Vec3 A = random_point3(rng);
          return Segment3{A, A + normal(rng) * d};
        },
        [&](const Segment3& s) { return cams().valid_segment(s); });
  }

  PointMatch point_match(const Vec3& X, NoiseSource& noise) const {
    Vec3 p, q;
    cams().project(X, p, q);
    return {noise.perturb(p), noise.perturb(q)};
  }

  LineMatch line_match(const Segment3& s, NoiseSource& noise) const {
    Vec3 pa, qa, pb, qb;
    cams().project(s.a, pa, qa);
    cams().project(s.b, pb, qb);
    const Vec3 a = noise.perturb(pa), b = noise.perturb(pb);
    const Vec3 a2 = noise.perturb(qa), b2 = noise.perturb(qb);
    return LineMatch::from_endpoints(a.head<2>(), b.head<2>(), a2.head<2>(), b2.head<2>());
  }

  void add_point(const Vec3& X) {
    scene_.data.points.push_back(point_match(X, noise_));
    scene_.provenance.point_is_inlier.push_back(true);
  }

  void add_line(const Segment3& s, int label) {
    scene_.data.lines.push_back(line_match(s, noise_));
    scene_.provenance.line_directions.push_back((s.b - s.a).normalized());
    scene_.provenance.line_labels.push_back(label);
  }

  // Plane through X1 spanned by two Gaussian directions.
  struct Plane {
    Vec3 origin, u, v;
  };

  Plane random_plane() {
    Plane pl{random_point3(geo_), normal3(geo_), normal3(geo_)};
    scene_.provenance.coplanar = true;
    scene_.provenance.plane_normal = pl.u.cross(pl.v).normalized();
    scene_.provenance.plane_distance = scene_.provenance.plane_normal.dot(pl.origin);
    return pl;
  }

  Vec3 plane_point(const Plane& pl) {
    return retry<Vec3>(
        [&] {
          const double a = normal(geo_), b = normal(geo_);
          return Vec3(pl.origin + a * pl.u + b * pl.v);
        },
        [&](const Vec3& X) {
          Vec3 p, q;
          return cams().project(X, p, q);
        });
  }

  Segment3 plane_line(const Plane& pl) {
    return retry<Segment3>(
        [&] {
          const double l1 = normal(geo_), l2 = normal(geo_), l3 = normal(geo_), l4 = normal(geo_);
          return Segment3{pl.origin + l1 * pl.u + l2 * pl.v, pl.origin + l3 * pl.u + l4 * pl.v};
        },
        [&](const Segment3& s) { return cams().valid_segment(s); });
  }

  // Direction at 90 - deviation degrees from D.
  Vec3 perpendicular_direction(const Vec3& D) {
    Vec3 d = D.cross(random_unit_vector(geo_));
    for (int k = 0; k < kMaxResamples && d.norm() < 1e-6; ++k) {
      d = D.cross(random_unit_vector(geo_));
    }
    d.normalize();
    const double delta = cfg_.ortho_deviation * std::numbers::pi / 180.0;
    return std::cos(delta) * d + std::sin(delta) * D;
  }

  // Two segments crossing at a common point X, one along each direction.
  std::array<Segment3, 2> junction_pair(const Vec3& d1, const Vec3& d2) {
    using Pair = std::array<Segment3, 2>;
    return retry<Pair>(
        [&] {
          const Vec3 X = random_point3(geo_);
          const double l1 = std::abs(normal(geo_)), l2 = std::abs(normal(geo_));
          const double l3 = std::abs(normal(geo_)), l4 = std::abs(normal(geo_));
          return Pair{Segment3{X + l1 * d1, X - l2 * d1}, Segment3{X + l3 * d2, X - l4 * d2}};
        },
        [&](const Pair& p) { return cams().valid_segment(p[0]) && cams().valid_segment(p[1]); });
  }

  // VP of `count` lines along D, from its own random streams.
  void add_vp(const Vec3& D, int index, int count, bool orient) {
    Rng rng(stream_seed(cfg_.rng_seed, cfg_.instance, RngStream::kVPGeometry, index));
    NoiseSource noise(stream_seed(cfg_.rng_seed, cfg_.instance, RngStream::kVPNoise, index),
                      cfg_.noise_sigma / cfg_.focal);
    VPMatch vp;
    std::vector<Vec3> l1, l2;
    for (int k = 0; k < count; ++k) {
      const Segment3 s = line_with_direction(rng, D);
      vp.supporting_lines.push_back(static_cast<int>(scene_.data.lines.size()));
      scene_.data.lines.push_back(line_match(s, noise));
      scene_.provenance.line_directions.push_back(D);
      scene_.provenance.line_labels.push_back(index);
      // Unnormalized endpoint cross products: longer segments weigh more.
      const LineMatch& m = scene_.data.lines.back();
      l1.push_back(m.endpoints[0].cross(m.endpoints[1]));
      l2.push_back(m.endpoints_prime[0].cross(m.endpoints_prime[1]));
    }
    if (count == 2) {
      vp.v = l1[0].cross(l1[1]).normalized();
      vp.v_prime = l2[0].cross(l2[1]).normalized();
    } else {
      vp.v = vp_least_squares(l1);
      vp.v_prime = vp_least_squares(l2);
    }
    if (orient) {
      const LineMatch& first = scene_.data.lines[vp.supporting_lines.front()];
      vp.oriented[0] = orient_vp(vp.v, first.endpoints);
      vp.oriented[1] = orient_vp(vp.v_prime, first.endpoints_prime);
    }
    scene_.data.vps.push_back(vp);
    scene_.provenance.vp_directions.push_back(D);
  }

 private:
  const SceneConfig& cfg_;
  SyntheticScene& scene_;
  Rng& geo_;
  NoiseSource noise_;
  std::optional<Cameras> cams_;
};

}  // namespace

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t instance, RngStream stream,
                          std::uint64_t sub) {
  std::uint64_t s = splitmix64(seed);
  s = splitmix64(s ^ instance);
  s = splitmix64(s ^ static_cast<std::uint64_t>(stream));
  return splitmix64(s ^ sub);
}

Mat3 random_rotation(Rng& rng) {
  Eigen::Quaterniond q;
  do {
    const double w = normal(rng), x = normal(rng), y = normal(rng), z = normal(rng);
    q = Eigen::Quaterniond(w, x, y, z);
  } while (q.norm() < 1e-8);
  return q.normalized().toRotationMatrix();
}

Vec3 random_unit_vector(Rng& rng) {
  Vec3 v = normal3(rng);
  while (v.norm() < 1e-8) v = normal3(rng);
  return v.normalized();
}

namespace {

// One attempt with the pose and entities drawn from `geo`.
SyntheticScene build_scene(SolverKind kind, const SceneConfig& cfg, Rng& geo) {
  SyntheticScene scene;
  Builder b(cfg, scene, geo);
  const SampleSize size = sample_size(kind);

  std::vector<Vec3> directions;
  for (int i = 0; i < size.vps; ++i) directions.push_back(random_unit_vector(b.geo()));

  switch (kind) {
    case SolverKind::P5:
    case SolverKind::P3V1:
    case SolverKind::P2V2:
      for (int i = 0; i < size.points; ++i) b.add_point(b.valid_point(b.geo()));
      break;
    case SolverKind::P4H:
    case SolverKind::P3L1H:
    case SolverKind::P2L2H:
    case SolverKind::P1L3H:
    case SolverKind::L4H: {
      const auto plane = b.random_plane();
      for (int i = 0; i < size.points; ++i) b.add_point(b.plane_point(plane));
      for (int i = 0; i < size.lines; ++i) b.add_line(b.plane_line(plane), -1);
      break;
    }
    case SolverKind::P2L3:
    case SolverKind::L3V1: {
      for (int i = 0; i < size.points; ++i) b.add_point(b.valid_point(b.geo()));
      const auto plane = b.random_plane();
      for (int i = 0; i < size.lines; ++i) b.add_line(b.plane_line(plane), -1);
      break;
    }
    case SolverKind::P2L1V1Perp: {
      for (int i = 0; i < 2; ++i) b.add_point(b.valid_point(b.geo()));
      const Vec3 d = b.perpendicular_direction(directions[0]);
      b.add_line(b.line_with_direction(b.geo(), d), -1);
      break;
    }
    case SolverKind::P1L2V1Perp: {
      b.add_point(b.valid_point(b.geo()));
      const Vec3 d1 = b.perpendicular_direction(directions[0]);
      const Vec3 d2 = random_unit_vector(b.geo());
      const auto pair = b.junction_pair(d1, d2);
      b.add_line(pair[0], -1);
      b.add_line(pair[1], -1);
      break;
    }
    case SolverKind::P2V1Perp: {
      const Vec3 d = b.perpendicular_direction(directions[0]);
      const auto s = b.line_with_direction(b.geo(), d);
      b.add_point(s.a);
      b.add_point(s.b);
      break;
    }
  }

  // The minimal sample is everything generated so far; VP support lines are
  // appended to data.lines afterwards.
  scene.sample.points = scene.data.points;
  scene.sample.lines = scene.data.lines;
  for (int i = 0; i < size.vps; ++i) {
    b.add_vp(directions[i], i, std::max(2, cfg.lines_per_vp), cfg.orient_vps);
  }
  scene.sample.vps = scene.data.vps;
  return scene;
}

}  // namespace

SyntheticScene sample_scene(SolverKind kind, const SceneConfig& cfg) {
  // An entity that keeps failing its checks usually means the second camera
  // looks away from the scene; the whole scene is then redrawn.
  Rng geo(stream_seed(cfg.rng_seed, cfg.instance, RngStream::kGeometry));
  int redraws = 0;
  SyntheticScene scene = build_scene(kind, cfg, geo);
  while (scene.provenance.exhausted && redraws < kMaxResamples) {
    ++redraws;
    scene = build_scene(kind, cfg, geo);
  }
  scene.provenance.scene_redraws = redraws;
  return scene;
}

std::vector<PointMatch> sample_extra_points(const SyntheticScene& scene, int count,
                                            const SceneConfig& cfg) {
  Rng rng(stream_seed(cfg.rng_seed, cfg.instance, RngStream::kExtraPoints, 0));
  NoiseSource noise(stream_seed(cfg.rng_seed, cfg.instance, RngStream::kExtraPoints, 1),
                    cfg.noise_sigma / cfg.focal);
  const Cameras cams(scene.rotation, scene.raw_translation);
  std::vector<PointMatch> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    Vec3 p, q, X;
    int tries = 0;
    do {
      X = Vec3(0.0, 0.0, cfg.point_mean_depth) + cfg.point_std * normal3(rng);
    } while (!cams.project(X, p, q) && ++tries < kMaxResamples);
    out.emplace_back(noise.perturb(p), noise.perturb(q));
  }
  return out;
}

namespace {

SyntheticScene build_pair(const PairConfig& cfg, Rng& geo) {
  SceneConfig sc;
  sc.rng_seed = cfg.seed;
  sc.instance = cfg.instance;
  sc.focal = cfg.focal;
  sc.noise_sigma = cfg.noise_px;
  SyntheticScene scene;
  Builder b(sc, scene, geo);

  const int outliers = static_cast<int>(std::lround(cfg.num_points * cfg.outlier_ratio));
  const int inliers = cfg.num_points - outliers;
  for (int i = 0; i < inliers; ++i) b.add_point(b.valid_point(b.geo()));
  Rng out_rng(stream_seed(cfg.seed, cfg.instance, RngStream::kOutliers));
  std::uniform_real_distribution<double> uniform(-cfg.outlier_extent, cfg.outlier_extent);
  for (int i = 0; i < outliers; ++i) {
    const double x = uniform(out_rng), y = uniform(out_rng);
    const double x2 = uniform(out_rng), y2 = uniform(out_rng);
    scene.data.points.emplace_back(Vec3(x, y, 1.0), Vec3(x2, y2, 1.0));
    scene.provenance.point_is_inlier.push_back(false);
  }

  std::vector<Vec3> directions;
  const double min_sep = cfg.min_vp_separation_deg * std::numbers::pi / 180.0;
  for (int i = 0; i < cfg.num_vps; ++i) {
    Vec3 D = random_unit_vector(b.geo());
    for (int k = 0; k < kMaxResamples; ++k) {
      bool ok = true;
      for (const Vec3& E : directions) {
        const double a = angle_between(D, E);
        ok = ok && std::min(a, std::numbers::pi - a) >= min_sep;
      }
      if (ok) break;
      D = random_unit_vector(b.geo());
    }
    directions.push_back(D);
  }
  for (int i = 0; i < cfg.num_vps; ++i) {
    b.add_vp(directions[i], i, std::max(2, cfg.lines_per_vp), cfg.orient_vps);
  }
  if (cfg.refine_vps) {
    VPFitConfig vc;
    for (auto& K : vc.intrinsics) K.fx = K.fy = cfg.focal;
    for (VPMatch& vm : scene.data.vps) {
      VPModel m{vm.v, vm.v_prime, vm.supporting_lines};
      m = refine_vp(m, scene.data.lines, vc);
      // Refinement keeps the orientation of its input up to sign.
      if (m.v.dot(vm.v) < 0.0) m.v = -m.v;
      if (m.v_prime.dot(vm.v_prime) < 0.0) m.v_prime = -m.v_prime;
      vm.v = m.v;
      vm.v_prime = m.v_prime;
    }
  }
  for (int i = 0; i < cfg.num_random_lines; ++i) {
    b.add_line(b.line_with_direction(b.geo(), random_unit_vector(b.geo())), -1);
  }
  return scene;
}

}  // namespace

SyntheticScene sample_pair(const PairConfig& cfg) {
  Rng geo(stream_seed(cfg.seed, cfg.instance, RngStream::kGeometry));
  int redraws = 0;
  SyntheticScene scene = build_pair(cfg, geo);
  while (scene.provenance.exhausted && redraws < kMaxResamples) {
    ++redraws;
    scene = build_pair(cfg, geo);
  }
  scene.provenance.scene_redraws = redraws;
  return scene;
}

}  // namespace relpose
