#include "teamnav/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace teamnav {

std::pair<Vec3, Vec3> barycenter(std::span<const AgentState> agents) {
  if (agents.empty()) throw std::invalid_argument("no agents");

  std::vector<std::size_t> order(agents.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return agents[a].id < agents[b].id;
  });

  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  for (std::size_t idx : order) {
    p += agents[idx].position;
    v += agents[idx].velocity;
  }
  const double n = static_cast<double>(agents.size());
  return {p / n, v / n};
}

void TeamState::refresh() {
  std::stable_sort(agents.begin(), agents.end(),
                   [](const AgentState& a, const AgentState& b) { return a.id < b.id; });
  std::tie(barycenter, barycenter_velocity) = teamnav::barycenter(agents);
}

const AgentState* TeamState::find(int id) const {
  for (const auto& a : agents)
    if (a.id == id) return &a;
  return nullptr;
}

bool all_finite(const Vec3& v) { return v.allFinite(); }

bool all_finite(const AgentState& a) {
  return a.position.allFinite() && a.velocity.allFinite() && a.acceleration.allFinite() &&
         a.commanded_position.allFinite();
}

Vec3 clamp_norm(const Vec3& v, double limit) {
  const double n = v.norm();
  if (n <= limit || n == 0.0) return v;
  return v * (limit / n);
}

}  // namespace teamnav
