#include "relpose/correspondences.h"

#include <limits>

#include "relpose/geometry.h"

namespace relpose {

double segment_parameter(const Vec3& a, const Vec3& b, const Vec3& x) {
  const Vec2 a2 = a.hnormalized(), b2 = b.hnormalized(), x2 = x.hnormalized();
  const Vec2 ab = b2 - a2;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (x2 - a2).dot(ab) / len2;
}

namespace {

bool within(const std::array<Vec3, 2>& seg, const Vec3& x) {
  const double s = segment_parameter(seg[0], seg[1], x);
  return s >= 0.0 && s <= 1.0;
}

}  // namespace

void derive_junctions(CorrespondenceSet& data, double parallel_tol) {
  data.junction_points.clear();
  data.junction_sources.clear();
  const int n = static_cast<int>(data.lines.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const LineMatch& a = data.lines[i];
      const LineMatch& b = data.lines[j];
      const auto junction = line_line_junction(a, b, parallel_tol);
      if (!junction) continue;
      if (!within(a.endpoints, junction->p) || !within(b.endpoints, junction->p)) continue;
      if (!within(a.endpoints_prime, junction->p_prime) ||
          !within(b.endpoints_prime, junction->p_prime)) {
        continue;
      }
      data.junction_points.push_back(*junction);
      data.junction_sources.push_back({i, j});
    }
  }
}

void derive_endpoints(CorrespondenceSet& data) {
  data.endpoint_points.clear();
  data.endpoint_sources.clear();
  for (int i = 0; i < static_cast<int>(data.lines.size()); ++i) {
    const LineMatch& m = data.lines[i];
    for (int k = 0; k < 2; ++k) {
      data.endpoint_points.emplace_back(m.endpoints[k] / m.endpoints[k].z(),
                                        m.endpoints_prime[k] / m.endpoints_prime[k].z());
      data.endpoint_sources.push_back({i, k});
    }
  }
}

std::vector<PointMatch> point_pool(const CorrespondenceSet& data, bool use_junctions,
                                   bool use_endpoints) {
  std::vector<PointMatch> pool = data.points;
  if (use_junctions) {
    pool.insert(pool.end(), data.junction_points.begin(), data.junction_points.end());
  }
  if (use_endpoints) {
    pool.insert(pool.end(), data.endpoint_points.begin(), data.endpoint_points.end());
  }
  return pool;
}

}  // namespace relpose
