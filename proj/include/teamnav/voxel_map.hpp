#pragma once

#include <array>
#include <cmath>
#include <compare>
#include <cstddef>
#include <set>
#include <vector>

#include "teamnav/types.hpp"

namespace teamnav {

struct VoxelKey {
  int x = 0;
  int y = 0;
  int z = 0;

  auto operator<=>(const VoxelKey&) const = default;
};

/// Sparse occupancy map. Voxel (i,j,k) covers origin + [i,i+1) * resolution
/// on each axis and its center sits at origin + (i + 0.5) * resolution.
/// The occupied set is ordered, so every reduction over voxels visits them
/// in lexicographic key order.
class VoxelMap {
 public:
  explicit VoxelMap(double resolution = 0.2, const Vec3& origin = Vec3::Zero());

  double resolution() const { return resolution_; }
  const Vec3& origin() const { return origin_; }
  const std::set<VoxelKey>& occupied() const { return occupied_; }
  std::size_t size() const { return occupied_.size(); }
  bool empty() const { return occupied_.empty(); }

  VoxelKey key_of(const Vec3& p) const;
  Vec3 center(const VoxelKey& k) const;
  bool contains(const VoxelKey& k) const { return occupied_.count(k) != 0; }
  bool insert(const VoxelKey& k) { return occupied_.insert(k).second; }

  /// Marks every voxel whose center lies inside the closed box. Throws if
  /// min_corner exceeds max_corner on any axis. Returns the number of voxels
  /// newly marked.
  std::size_t insert_box(const Vec3& min_corner, const Vec3& max_corner);

  bool same_grid(const VoxelMap& other) const;

  /// Calls fn(key, center) for every occupied voxel whose center is within
  /// `radius` of p (strictly less than). Visits in key order.
  template <typename Fn>
  void for_each_within(const Vec3& p, double radius, Fn&& fn) const;

 private:
  double resolution_;
  Vec3 origin_;
  std::set<VoxelKey> occupied_;
};

/// Copies every ground-truth voxel within `horizon` of p into `known`.
/// Returns the keys that were newly added, in key order. Throws if the two
/// maps do not share resolution and origin.
std::vector<VoxelKey> discover(const VoxelMap& truth, VoxelMap& known, const Vec3& p,
                               double horizon);

struct RepulsionParams {
  double max_force = 25.0;  // F_s [N]
  double decay = 0.55;      // lambda [1/m]
  double horizon = 3.0;     // h [m]

  void validate() const;
};

/// Per-voxel repulsion magnitude at distance d. Equals max_force at d = 0 and
/// drops to zero at d = horizon; callers exclude voxels at or beyond horizon.
double repulsion_magnitude(double d, const RepulsionParams& params);

/// Sum of per-voxel repulsions, each pointing from the voxel center to p.
/// A voxel exactly at p pushes along +z with full magnitude.
Vec3 repulsion_force(const Vec3& p, const VoxelMap& map, const RepulsionParams& params);

/// True iff no occupied voxel center lies within `clearance` of segment [a,b].
bool segment_free(const VoxelMap& map, const Vec3& a, const Vec3& b, double clearance);

/// Distance from p to the nearest occupied voxel center, +inf on an empty map.
double nearest_occupied_distance(const Vec3& p, const VoxelMap& map);

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b);

// --------------------------------------------------------------------------

template <typename Fn>
void VoxelMap::for_each_within(const Vec3& p, double radius, Fn&& fn) const {
  if (occupied_.empty() || radius <= 0.0) return;
  const double r2 = radius * radius;
  const int reach = static_cast<int>(std::ceil(radius / resolution_)) + 1;
  const std::size_t window = static_cast<std::size_t>(2 * reach + 1);

  auto visit = [&](const VoxelKey& k) {
    const Vec3 c = center(k);
    if ((c - p).squaredNorm() < r2) fn(k, c);
  };

  if (occupied_.size() <= window * window) {
    for (const auto& k : occupied_) visit(k);
    return;
  }
  // Row scan: one ordered range per (x, y) column of the key window.
  const VoxelKey kp = key_of(p);
  for (int x = kp.x - reach; x <= kp.x + reach; ++x) {
    for (int y = kp.y - reach; y <= kp.y + reach; ++y) {
      auto it = occupied_.lower_bound(VoxelKey{x, y, kp.z - reach});
      const VoxelKey last{x, y, kp.z + reach};
      for (; it != occupied_.end() && *it <= last; ++it) visit(*it);
    }
  }
}

}  // namespace teamnav
