#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "teamnav/admittance.hpp"
#include "teamnav/flocking.hpp"
#include "teamnav/planner.hpp"
#include "teamnav/voxel_map.hpp"

namespace teamnav {

enum class Mode { kBaseline, kShared };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view text);

struct Box {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();
};

struct Waypoint {
  double time = 0.0;
  Vec3 position = Vec3::Zero();
};

struct SimParams {
  double dt = 0.02;
  double k_track_p = 4.0;
  double k_track_d = 3.0;
  double replan_period = 2.0;
  double resolution = 0.2;
  Vec3 origin = Vec3::Zero();
  double operator_jitter = 0.0;  // std-dev [m] added to scripted marker positions
  std::uint64_t seed = 42;

  void validate() const;
};

struct Scenario {
  std::string name;
  std::vector<Box> obstacles;
  std::vector<Vec3> agent_starts;
  Vec3 goal = Vec3::Zero();
  double goal_tolerance = 0.5;
  Mode mode = Mode::kShared;
  std::vector<Waypoint> operator_script;
  double duration_max = 120.0;

  PlannerParams planner;
  AdmittanceParams admittance;
  FlockParams flocking;
  RepulsionParams repulsion;
  SimParams sim;

  /// Checks cross-field invariants; throws ScenarioError.
  void validate() const;
  VoxelMap build_truth_map() const;
};

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses a YAML scenario document. Unknown keys are rejected and every
/// error message names the offending field.
Scenario load_scenario(std::string_view text);
Scenario load_scenario_file(const std::filesystem::path& path);

/// Operator script only (a YAML list of {t, p} entries, or a mapping with an
/// `operator_script` key).
std::vector<Waypoint> load_operator_script_file(const std::filesystem::path& path);

}  // namespace teamnav
