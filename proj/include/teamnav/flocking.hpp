#pragma once

#include <cstdint>

#include "teamnav/types.hpp"

namespace teamnav {

struct FlockParams {
  double alpha = 1.0;       // cohesion gain [1/s^2]
  double beta = 0.3;        // velocity consensus gain [1/s]
  double k_p = 2.0;         // tracking stiffness [1/s^2]
  double k_v = 1.5;         // tracking damping [1/s]
  double radius = 5.0;      // interaction radius R [m]
  double epsilon = 0.08;    // sigma-norm smoothing
  double h_bump = 0.1;      // cutoff transition of the bump function
  double d_ref = 1.5;       // desired spacing [m]
  double a_max = 2.0;       // [m/s^2]
  double v_max = 1.0;       // [m/s]

  void validate() const;
};

/// Counters for degenerate geometry met while evaluating the flock.
struct FlockDiagnostics {
  std::uint64_t coincident_pairs = 0;
};

double sigma_norm(double z, double epsilon);

/// 1 on [0, h), cosine ramp to 0 on [h, 1], 0 elsewhere.
double bump(double z, double h);

/// Cohesion acceleration on agent i from neighbour j, p_ji = p_j - p_i.
/// Coincident agents contribute zero and bump the diagnostics counter.
Vec3 cohesion(const Vec3& p_ji, const FlockParams& params, FlockDiagnostics* diag = nullptr);

/// Cohesion, consensus, tracking of (p_c, v_c) and obstacle terms for the
/// agent at `index` in team.agents, clamped to a_max.
Vec3 reference_accel(std::size_t index, const TeamState& team, const Vec3& p_c, const Vec3& v_c,
                     const Vec3& repulsion, const FlockParams& params,
                     FlockDiagnostics* diag = nullptr);

/// Double-integrated position command with velocity saturation.
struct CommandState {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
};

/// v <- clamp(v + a dt, v_max); p <- p + v dt. Returns the new command position.
Vec3 integrate_command(CommandState& cmd, const Vec3& a_ref, double dt, const FlockParams& params);

}  // namespace teamnav
