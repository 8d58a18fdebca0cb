#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "teamnav/admittance.hpp"
#include "teamnav/flocking.hpp"
#include "teamnav/operator.hpp"
#include "teamnav/planner.hpp"
#include "teamnav/scenario.hpp"
#include "teamnav/voxel_map.hpp"

namespace teamnav {

/// Replan event captured in a tick record.
struct PlanEvent {
  double plan_time = 0.0;
  Vec3 virtual_goal = Vec3::Zero();
  Vec3 user_force = Vec3::Zero();  // force used inside the planner cost
  PlannedPath path;
};

/// State after one tick plus the events produced during it.
struct TickRecord {
  std::int64_t tick = 0;
  double time = 0.0;
  std::vector<AgentState> agents;
  std::vector<Vec3> a_ref;  // clamped reference accelerations, per agent
  std::vector<Vec3> v_cmd;  // command velocities, per agent
  Vec3 p_bar = Vec3::Zero();
  Vec3 v_bar = Vec3::Zero();
  Vec3 p_c = Vec3::Zero();
  Vec3 v_c = Vec3::Zero();
  Vec3 p_ref = Vec3::Zero();
  Vec3 f_usr = Vec3::Zero();
  Vec3 f_rep = Vec3::Zero();
  Vec3 goal = Vec3::Zero();
  OperatorInput op;
  std::vector<VoxelKey> new_voxels;
  std::optional<PlanEvent> plan;
  bool goal_reached = false;
};

struct MetricsReport {
  double avg_distance_traveled = 0.0;
  double time_to_goal = 0.0;
  double mean_velocity = 0.0;
  double min_obstacle_distance = 0.0;
  double min_inter_agent_distance = 0.0;
  double avg_user_force = 0.0;
  bool timeout = false;
};

/// Metrics over a recorded run. Obstacle distances are measured against
/// `truth`. Throws on an empty trace.
MetricsReport compute_metrics(std::span<const TickRecord> trace, const VoxelMap& truth);

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Deterministic fixed-step world. Each step() runs, in order: operator
/// sampling, discovery from agent 0, replanning on cadence, admittance update
/// of the migration point, flocking commands, agent dynamics, bookkeeping.
class World {
 public:
  explicit World(Scenario scenario);

  const Scenario& scenario() const { return scenario_; }
  const SimClock& clock() const { return clock_; }
  double time() const { return clock_.time(); }
  const TeamState& team() const { return team_; }
  const VoxelMap& truth_map() const { return truth_; }
  const VoxelMap& known_map() const { return known_; }
  const AdmittanceState& migration() const { return admittance_; }
  const PlannedPath& path() const { return path_; }
  const OperatorInput& operator_input() const { return operator_; }
  const Vec3& goal() const { return goal_; }
  const std::vector<double>& plan_times() const { return plan_times_; }
  const FlockDiagnostics& flock_diagnostics() const { return flock_diag_; }
  std::span<const TickRecord> trace() const { return trace_; }

  bool goal_reached() const { return goal_reached_; }
  bool timed_out() const { return !goal_reached_ && clock_.time() > scenario_.duration_max; }
  bool finished() const { return goal_reached_ || timed_out(); }

  /// Live operator input replaces the scripted one; commands are drained from
  /// `queue` at the start of every tick.
  void attach_live_operator(CommandQueue* queue);
  void apply(const OperatorCommand& cmd);

  const TickRecord& step();

  /// Steps until the goal is reached or the run times out.
  MetricsReport run();
  MetricsReport metrics() const;

  /// When false, ticks are not appended to the in-memory trace (metrics are
  /// then unavailable). Used by long-running live sessions.
  void keep_trace(bool keep) { keep_trace_ = keep; }

 private:
  TickRecord snapshot_record() const;
  void check_finite(const TickRecord& rec) const;

  Scenario scenario_;
  SimClock clock_;
  VoxelMap truth_;
  VoxelMap known_;
  TeamState team_;
  std::vector<CommandState> commands_;
  std::vector<Vec3> last_a_ref_;
  AdmittanceState admittance_;
  PlannedPath path_;
  Vec3 goal_;
  Vec3 last_ref_ = Vec3::Zero();
  Vec3 last_f_usr_ = Vec3::Zero();
  Vec3 last_f_rep_ = Vec3::Zero();
  OperatorInput operator_;
  OperatorInput live_;
  CommandQueue* live_queue_ = nullptr;
  bool live_mode_ = false;
  std::vector<double> plan_times_;
  FlockDiagnostics flock_diag_;
  std::mt19937_64 rng_;
  bool goal_reached_ = false;
  bool keep_trace_ = true;
  TickRecord last_;
  std::vector<TickRecord> trace_;
};

}  // namespace teamnav
