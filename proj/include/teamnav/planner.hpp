#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "teamnav/types.hpp"
#include "teamnav/voxel_map.hpp"

namespace teamnav {

/// Constant-acceleration segment of a double integrator.
struct MotionPrimitive {
  Vec3 start_position = Vec3::Zero();
  Vec3 start_velocity = Vec3::Zero();
  Vec3 control = Vec3::Zero();
  double duration = 0.0;

  Vec3 position(double t) const {
    return start_position + start_velocity * t + 0.5 * control * t * t;
  }
  Vec3 velocity(double t) const { return start_velocity + control * t; }
  Vec3 end_position() const { return position(duration); }
  Vec3 end_velocity() const { return velocity(duration); }
};

struct PlannedPath {
  std::vector<MotionPrimitive> primitives;
  double total_duration = 0.0;
  double total_cost = 0.0;
  bool partial = false;

  bool empty() const { return primitives.empty(); }
  /// Path state at time t in [0, total_duration] (clamped).
  Vec3 position(double t) const;
  Vec3 velocity(double t) const;
  /// Control of the primitive active at t; the last primitive owns t = T.
  Vec3 acceleration(double t) const;
  /// Recomputes total_duration from the primitives.
  void retime();
};

struct PlannerParams {
  double rho = 1.5;        // time weight
  double rho_c = 0.05;     // obstacle weight
  double rho_usr = 35.0;   // user-alignment weight
  double tau = 0.8;        // user-alignment decay [s]
  double horizon = 3.0;    // planning horizon [m]
  double primitive_dt = 1.3;
  double u_max = 0.5;      // [m/s^2] per axis
  double v_max = 1.0;      // [m/s]
  int control_levels = 3;  // per axis
  int depth_max = 6;
  double goal_tolerance = 0.5;
  double clearance = 0.3;
  double position_quantum = 0.1;
  double velocity_quantum = 0.25;
  int obstacle_samples = 10;   // trapezoid intervals per primitive for J_c
  int user_samples = 10;       // Simpson intervals per primitive for J_usr
  std::int64_t max_expansions = 200000;
  // Flight envelope for the planned path; unbounded by default.
  Vec3 workspace_min = Vec3::Constant(-std::numeric_limits<double>::infinity());
  Vec3 workspace_max = Vec3::Constant(std::numeric_limits<double>::infinity());

  void validate() const;
};

struct UserForce {
  Vec3 vector = Vec3::Zero();
};

struct PlanStart {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
};

/// One primitive per control on the per-axis grid, x-major order. Controls
/// whose end speed exceeds v_max are dropped.
std::vector<MotionPrimitive> expand(const PlanStart& state, const PlannerParams& params);

/// Integral of |u|^2 over the primitive.
double control_cost(const MotionPrimitive& prim);

/// Trapezoidal integral of |F_rep(p(t))| over the primitive.
double obstacle_cost(const MotionPrimitive& prim, const VoxelMap& map,
                     const RepulsionParams& rep, int intervals = 10);

/// User-alignment integral over [t0, t0 + duration] of one primitive placed at
/// absolute path time t0 (composite Simpson, `intervals` must be even).
double user_cost_segment(const MotionPrimitive& prim, double t0, const UserForce& force,
                         double tau, int intervals = 10);

/// User-alignment cost of a whole path; the sample step is primitive_dt/10.
double user_cost(const PlannedPath& path, const UserForce& force, double tau,
                 int intervals_per_primitive = 10);

/// Goal clipped to the horizon sphere around p_bar.
Vec3 project_goal(const Vec3& p_bar, const Vec3& goal, double horizon);

/// True iff every point of the primitive keeps `clearance` from the map.
bool primitive_free(const MotionPrimitive& prim, const VoxelMap& map, double clearance);
/// True if the whole primitive stays inside [lo, hi] (checked exactly per axis).
bool primitive_inside(const MotionPrimitive& prim, const Vec3& lo, const Vec3& hi);

/// Cost of one primitive placed at absolute path time t0 under the planner
/// weights. Summing this over a path gives the planner objective.
double primitive_cost(const MotionPrimitive& prim, double t0, const VoxelMap& map,
                      const UserForce& force, const PlannerParams& params,
                      const RepulsionParams& rep);

/// Planner objective evaluated over a whole path in one pass.
double path_cost(const PlannedPath& path, const VoxelMap& map, const UserForce& force,
                 const PlannerParams& params, const RepulsionParams& rep);

struct PlanStats {
  std::int64_t expansions = 0;
  std::int64_t generated = 0;
  bool budget_exhausted = false;
};

/// A* over the primitive lattice. Returns the cheapest sequence of at most
/// depth_max primitives whose end is within goal_tolerance of the goal. When
/// no such sequence exists the path ending closest to the goal is returned
/// with `partial` set.
PlannedPath plan(const PlanStart& start, const Vec3& virtual_goal, const VoxelMap& map,
                 const UserForce& force, const PlannerParams& params,
                 const RepulsionParams& rep, PlanStats* stats = nullptr);

bool replan_due(const SimClock& clock, double period);

}  // namespace teamnav
