#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace teamnav {

using Vec3 = Eigen::Vector3d;

struct AgentState {
  int id = 0;
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Vec3 acceleration = Vec3::Zero();
  Vec3 commanded_position = Vec3::Zero();
};

/// Team snapshot. Agents are kept sorted by id; barycenter fields are
/// refreshed by refresh() and must be recomputed after any agent update.
struct TeamState {
  std::vector<AgentState> agents;
  Vec3 barycenter = Vec3::Zero();
  Vec3 barycenter_velocity = Vec3::Zero();

  void refresh();
  const AgentState* find(int id) const;
};

struct SimClock {
  std::int64_t tick = 0;
  double dt = 0.02;

  double time() const { return static_cast<double>(tick) * dt; }
};

/// Mean position and mean velocity. Reduction runs in id order so the result
/// does not depend on the order of the input list. Throws on an empty list.
std::pair<Vec3, Vec3> barycenter(std::span<const AgentState> agents);

bool all_finite(const Vec3& v);
bool all_finite(const AgentState& a);

/// Scales v down to norm `limit` if it is longer; returns v unchanged otherwise.
Vec3 clamp_norm(const Vec3& v, double limit);

}  // namespace teamnav
