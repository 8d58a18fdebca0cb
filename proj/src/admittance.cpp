#include "teamnav/admittance.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

namespace teamnav {

void AdmittanceParams::validate() const {
  auto positive = [](const Vec3& v) { return (v.array() > 0.0).all() && v.allFinite(); };
  if (!positive(mass) || !positive(damping) || !positive(stiffness))
    throw std::invalid_argument("admittance M, D, K diagonals must be > 0");
  if (!positive(user_kp) || !positive(user_kd))
    throw std::invalid_argument("admittance user gains must be > 0");
  if (user_force_sign != 1.0 && user_force_sign != -1.0)
    throw std::invalid_argument("admittance.user_force_sign must be +1 or -1");
  if (!(lookahead >= 0.0)) throw std::invalid_argument("admittance.lookahead must be >= 0");
}

UserForce user_force(const Vec3& p_bar, const Vec3& v_bar, const Vec3& p_u, const Vec3& v_u,
                     const AdmittanceParams& params, bool take_control) {
  if (!take_control) return {};
  const Vec3 literal = params.user_kp.cwiseProduct(p_bar - p_u) - params.user_kd.cwiseProduct(v_bar - v_u);
  return {-params.user_force_sign * literal};
}

ReferenceSample project_reference(const Vec3& p_bar, const PlannedPath& path, double lookahead,
                                  double sample_dt) {
  if (path.empty()) throw std::invalid_argument("no reference available");
  if (!(sample_dt > 0.0)) throw std::invalid_argument("sample_dt must be > 0");

  const double total = path.total_duration;
  double best_t = 0.0;
  double best_d = (path.position(0.0) - p_bar).squaredNorm();
  const auto samples = static_cast<long>(std::floor(total / sample_dt));
  for (long k = 1; k <= samples + 1; ++k) {
    const double t = std::min(static_cast<double>(k) * sample_dt, total);
    const double d = (path.position(t) - p_bar).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best_t = t;
    }
  }
  ReferenceSample ref;
  ref.time = std::min(best_t + lookahead, total);
  ref.p_r = path.position(ref.time);
  ref.v_r = path.velocity(ref.time);
  ref.a_r = path.acceleration(ref.time);
  return ref;
}

namespace {

/// Exact transition of  x'' = (f - d x' - k x) / m  over dt with constant f.
std::pair<double, double> exact_axis(double x, double v, double f, double m, double d, double k,
                                     double dt) {
  Eigen::Matrix3d a = Eigen::Matrix3d::Zero();
  a(0, 1) = 1.0;
  a(1, 0) = -k / m;
  a(1, 1) = -d / m;
  a(1, 2) = 1.0 / m;
  const Eigen::Matrix3d phi = (a * dt).exp();
  const Eigen::Vector3d next = phi * Eigen::Vector3d(x, v, f);
  return {next(0), next(1)};
}

}  // namespace

AdmittanceState step(const AdmittanceState& state, const ReferenceSample& ref, const Vec3& force,
                     const AdmittanceParams& params, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  const Vec3 e = state.p_c - ref.p_r;
  const Vec3 e_dot = state.v_c - ref.v_r;

  AdmittanceState next;
  if (params.integrator == AdmittanceIntegrator::kSemiImplicit) {
    const Vec3 e_ddot = (force - params.damping.cwiseProduct(e_dot) - params.stiffness.cwiseProduct(e))
                            .cwiseQuotient(params.mass);
    next.v_c = state.v_c + (ref.a_r + e_ddot) * dt;
    next.p_c = state.p_c + next.v_c * dt;
    return next;
  }

  Vec3 e_next, e_dot_next;
  for (int axis = 0; axis < 3; ++axis) {
    std::tie(e_next[axis], e_dot_next[axis]) =
        exact_axis(e[axis], e_dot[axis], force[axis], params.mass[axis], params.damping[axis],
                   params.stiffness[axis], dt);
  }
  const Vec3 p_r_next = ref.p_r + ref.v_r * dt + 0.5 * ref.a_r * dt * dt;
  const Vec3 v_r_next = ref.v_r + ref.a_r * dt;
  next.p_c = p_r_next + e_next;
  next.v_c = v_r_next + e_dot_next;
  return next;
}

}  // namespace teamnav
