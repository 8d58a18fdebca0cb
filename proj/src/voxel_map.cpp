#include "teamnav/voxel_map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace teamnav {

namespace {
constexpr double kBoxTolerance = 1e-9;
}

VoxelMap::VoxelMap(double resolution, const Vec3& origin)
    : resolution_(resolution), origin_(origin) {
  if (!(resolution > 0.0) || !std::isfinite(resolution))
    throw std::invalid_argument("voxel resolution must be positive");
  if (!origin.allFinite()) throw std::invalid_argument("voxel origin must be finite");
}

VoxelKey VoxelMap::key_of(const Vec3& p) const {
  const Vec3 q = (p - origin_) / resolution_;
  return {static_cast<int>(std::floor(q.x())), static_cast<int>(std::floor(q.y())),
          static_cast<int>(std::floor(q.z()))};
}

Vec3 VoxelMap::center(const VoxelKey& k) const {
  return origin_ + resolution_ * Vec3(k.x + 0.5, k.y + 0.5, k.z + 0.5);
}

std::size_t VoxelMap::insert_box(const Vec3& min_corner, const Vec3& max_corner) {
  if (!min_corner.allFinite() || !max_corner.allFinite())
    throw std::invalid_argument("box corners must be finite");
  for (int a = 0; a < 3; ++a)
    if (min_corner[a] > max_corner[a])
      throw std::invalid_argument("inverted box on axis " + std::to_string(a));

  std::array<int, 3> lo{}, hi{};
  for (int a = 0; a < 3; ++a) {
    // Center index c satisfies min <= origin + (c + 0.5) res <= max.
    lo[a] = static_cast<int>(
        std::ceil((min_corner[a] - origin_[a]) / resolution_ - 0.5 - kBoxTolerance));
    hi[a] = static_cast<int>(
        std::floor((max_corner[a] - origin_[a]) / resolution_ - 0.5 + kBoxTolerance));
  }
  std::size_t added = 0;
  for (int x = lo[0]; x <= hi[0]; ++x)
    for (int y = lo[1]; y <= hi[1]; ++y)
      for (int z = lo[2]; z <= hi[2]; ++z) added += insert(VoxelKey{x, y, z}) ? 1 : 0;
  return added;
}

bool VoxelMap::same_grid(const VoxelMap& other) const {
  return resolution_ == other.resolution_ && origin_ == other.origin_;
}

std::vector<VoxelKey> discover(const VoxelMap& truth, VoxelMap& known, const Vec3& p,
                               double horizon) {
  if (!truth.same_grid(known))
    throw std::invalid_argument("discover: resolution/origin mismatch between maps");
  std::vector<VoxelKey> added;
  // Closed ball: a voxel at exactly `horizon` counts as seen.
  const double r = std::nextafter(horizon, std::numeric_limits<double>::infinity());
  truth.for_each_within(p, r, [&](const VoxelKey& k, const Vec3&) {
    if (known.insert(k)) added.push_back(k);
  });
  return added;
}

void RepulsionParams::validate() const {
  if (!(max_force > 0.0)) throw std::invalid_argument("repulsion.F_s must be > 0");
  if (!(decay > 0.0)) throw std::invalid_argument("repulsion.lambda must be > 0");
  if (!(horizon > 0.0)) throw std::invalid_argument("repulsion.horizon must be > 0");
}

double repulsion_magnitude(double d, const RepulsionParams& params) {
  // k = 1 - e^h is negative, as is (1 - e^{h-d}) for d < h; the product is >= 0.
  const double k = 1.0 - std::exp(params.horizon);
  return (params.max_force / k) * std::exp(-params.decay * d) *
         (1.0 - std::exp(params.horizon - d));
}

Vec3 repulsion_force(const Vec3& p, const VoxelMap& map, const RepulsionParams& params) {
  Vec3 total = Vec3::Zero();
  map.for_each_within(p, params.horizon, [&](const VoxelKey&, const Vec3& c) {
    const Vec3 away = p - c;
    const double d = away.norm();
    if (d == 0.0) {
      total += Vec3::UnitZ() * params.max_force;
      return;
    }
    total += repulsion_magnitude(d, params) * (away / d);
  });
  return total;
}

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double s = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + s * ab)).norm();
}

bool segment_free(const VoxelMap& map, const Vec3& a, const Vec3& b, double clearance) {
  if (map.empty()) return true;
  const double length = (b - a).norm();
  const double step = map.resolution() / 2.0;
  const int n = std::max(1, static_cast<int>(std::ceil(length / step)));
  // Every point of the segment is within step/2 of some sample, so a search
  // radius of clearance + step/2 around the samples covers all candidates.
  const double reach = clearance + step;
  bool free = true;
  for (int i = 0; i <= n && free; ++i) {
    const Vec3 s = a + (b - a) * (static_cast<double>(i) / n);
    map.for_each_within(s, reach, [&](const VoxelKey&, const Vec3& c) {
      if (point_segment_distance(c, a, b) < clearance) free = false;
    });
  }
  return free;
}

double nearest_occupied_distance(const Vec3& p, const VoxelMap& map) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& k : map.occupied()) best = std::min(best, (map.center(k) - p).norm());
  return best;
}

}  // namespace teamnav
