#pragma once

#include <deque>
#include <mutex>
#include <span>
#include <variant>
#include <vector>

#include "teamnav/scenario.hpp"
#include "teamnav/types.hpp"

namespace teamnav {

enum class OperatorSource { kScripted, kLive };

struct OperatorInput {
  Vec3 p_u = Vec3::Zero();
  Vec3 v_u = Vec3::Zero();
  bool take_control = false;
  OperatorSource source = OperatorSource::kScripted;
};

/// Piecewise-linear marker trajectory. Before the first waypoint (or with an
/// empty script) the marker sits on the barycenter without control.
OperatorInput scripted_operator(std::span<const Waypoint> script, double t, const TeamState& team);

// Commands flowing from a live console into the simulation.
struct SetControl {
  bool enabled = false;
};
struct SetTarget {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
};
struct SetGoal {
  Vec3 position = Vec3::Zero();
};
using OperatorCommand = std::variant<SetControl, SetTarget, SetGoal>;

/// Multi-producer, single-consumer queue drained by the sim at the start of
/// each tick.
class CommandQueue {
 public:
  void push(OperatorCommand cmd) {
    std::lock_guard lock(mutex_);
    items_.push_back(std::move(cmd));
  }

  std::vector<OperatorCommand> drain() {
    std::lock_guard lock(mutex_);
    std::vector<OperatorCommand> out(items_.begin(), items_.end());
    items_.clear();
    return out;
  }

 private:
  std::mutex mutex_;
  std::deque<OperatorCommand> items_;
};

}  // namespace teamnav
