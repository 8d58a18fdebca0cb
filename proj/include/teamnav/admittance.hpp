#pragma once

#include "teamnav/planner.hpp"
#include "teamnav/types.hpp"

namespace teamnav {

enum class AdmittanceIntegrator {
  kExact,          // zero-order hold on the force, exact per-axis transition
  kSemiImplicit,   // symplectic Euler
};

/// Diagonal gains are stored as vectors of the diagonal entries.
struct AdmittanceParams {
  Vec3 mass = Vec3::Constant(1.5);
  Vec3 damping = Vec3::Constant(6.0);
  Vec3 stiffness = Vec3::Constant(8.0);
  Vec3 user_kp = Vec3::Constant(2.0);
  Vec3 user_kd = Vec3::Constant(0.5);
  /// +1 pulls the team toward the operator marker; -1 is the literal
  /// K_p (p_bar - p_u) - K_d (v_bar - v_u) orientation.
  double user_force_sign = 1.0;
  double lookahead = 0.4;  // [s]
  AdmittanceIntegrator integrator = AdmittanceIntegrator::kExact;

  void validate() const;
};

struct AdmittanceState {
  Vec3 p_c = Vec3::Zero();
  Vec3 v_c = Vec3::Zero();
};

struct ReferenceSample {
  Vec3 p_r = Vec3::Zero();
  Vec3 v_r = Vec3::Zero();
  Vec3 a_r = Vec3::Zero();
  double time = 0.0;  // path time of the sample
};

/// Spring-damper user force; zero when the operator does not hold control.
UserForce user_force(const Vec3& p_bar, const Vec3& v_bar, const Vec3& p_u, const Vec3& v_u,
                     const AdmittanceParams& params, bool take_control = true);

/// Closest path point to p_bar (sampled every `sample_dt`), advanced by
/// `lookahead` seconds and clamped to the path end. Throws on an empty path.
ReferenceSample project_reference(const Vec3& p_bar, const PlannedPath& path, double lookahead,
                                  double sample_dt = 0.02);

/// Advances the migration point by dt under
///   M (a_c - a_r) + D (v_c - v_r) + K (p_c - p_r) = F_v
/// with the reference moving at constant acceleration a_r during the step.
AdmittanceState step(const AdmittanceState& state, const ReferenceSample& ref, const Vec3& force,
                     const AdmittanceParams& params, double dt);

}  // namespace teamnav
