#include "teamnav/flocking.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace teamnav {

void FlockParams::validate() const {
  if (!(h_bump > 0.0 && h_bump < 1.0)) throw std::invalid_argument("flocking.h_bump must be in (0, 1)");
  if (!(epsilon > 0.0)) throw std::invalid_argument("flocking.epsilon must be > 0");
  if (!(radius > 0.0)) throw std::invalid_argument("flocking.R must be > 0");
  if (!(d_ref < radius)) throw std::invalid_argument("flocking.d_ref must be < R");
  if (!(a_max > 0.0) || !(v_max > 0.0)) throw std::invalid_argument("flocking limits must be > 0");
  if (alpha < 0 || beta < 0 || k_p < 0 || k_v < 0) throw std::invalid_argument("flocking gains must be >= 0");
}

double sigma_norm(double z, double epsilon) {
  return (std::sqrt(1.0 + epsilon * z * z) - 1.0) / epsilon;
}

double bump(double z, double h) {
  if (z < 0.0 || z > 1.0) return 0.0;
  if (z < h) return 1.0;
  return 0.5 * (1.0 + std::cos(std::numbers::pi * (z - h) / (1.0 - h)));
}

Vec3 cohesion(const Vec3& p_ji, const FlockParams& params, FlockDiagnostics* diag) {
  const double dist = p_ji.norm();
  if (dist == 0.0) {
    if (diag) ++diag->coincident_pairs;
    return Vec3::Zero();
  }
  const double s = sigma_norm(dist, params.epsilon);
  const double weight = bump(s / sigma_norm(params.radius, params.epsilon), params.h_bump);
  if (weight == 0.0) return Vec3::Zero();
  return params.alpha * weight * (s - sigma_norm(params.d_ref, params.epsilon)) * (p_ji / dist);
}

Vec3 reference_accel(std::size_t index, const TeamState& team, const Vec3& p_c, const Vec3& v_c,
                     const Vec3& repulsion, const FlockParams& params, FlockDiagnostics* diag) {
  if (index >= team.agents.size()) throw std::out_of_range("agent index out of range");
  const AgentState& self = team.agents[index];

  Vec3 coh = Vec3::Zero();
  Vec3 consensus = Vec3::Zero();
  for (std::size_t j = 0; j < team.agents.size(); ++j) {
    if (j == index) continue;
    const AgentState& other = team.agents[j];
    const Vec3 p_ji = other.position - self.position;
    if (p_ji.norm() >= params.radius) continue;
    coh += cohesion(p_ji, params, diag);
    consensus += other.velocity - self.velocity;
  }
  const Vec3 tracking = params.k_p * (p_c - self.position) + params.k_v * (v_c - self.velocity);
  return clamp_norm(coh + params.beta * consensus + tracking + repulsion, params.a_max);
}

Vec3 integrate_command(CommandState& cmd, const Vec3& a_ref, double dt, const FlockParams& params) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  cmd.velocity = clamp_norm(cmd.velocity + a_ref * dt, params.v_max);
  cmd.position += cmd.velocity * dt;
  return cmd.position;
}

}  // namespace teamnav
