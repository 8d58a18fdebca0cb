#include "teamnav/operator.hpp"

namespace teamnav {

OperatorInput scripted_operator(std::span<const Waypoint> script, double t, const TeamState& team) {
  OperatorInput in;
  in.source = OperatorSource::kScripted;
  if (script.empty() || t < script.front().time) {
    in.p_u = team.barycenter;
    in.v_u = team.barycenter_velocity;
    return in;
  }
  in.take_control = true;
  if (t >= script.back().time) {
    in.p_u = script.back().position;
    return in;
  }
  for (std::size_t i = 0; i + 1 < script.size(); ++i) {
    const Waypoint& a = script[i];
    const Waypoint& b = script[i + 1];
    if (t < b.time) {
      const double span = b.time - a.time;
      if (span <= 0.0) {
        in.p_u = b.position;
        return in;
      }
      const double s = (t - a.time) / span;
      in.p_u = a.position + s * (b.position - a.position);
      in.v_u = (b.position - a.position) / span;
      return in;
    }
  }
  in.p_u = script.back().position;
  return in;
}

}  // namespace teamnav
