#include "teamnav/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace teamnav {

namespace {

std::string dump_vec(const Vec3& v) {
  std::ostringstream os;
  os.precision(17);
  os << "[" << v.x() << ", " << v.y() << ", " << v.z() << "]";
  return os.str();
}

}  // namespace

World::World(Scenario scenario)
    : scenario_(std::move(scenario)),
      truth_(scenario_.build_truth_map()),
      known_(scenario_.sim.resolution, scenario_.sim.origin),
      goal_(scenario_.goal),
      rng_(scenario_.sim.seed) {
  scenario_.validate();
  clock_.dt = scenario_.sim.dt;

  for (std::size_t i = 0; i < scenario_.agent_starts.size(); ++i) {
    AgentState a;
    a.id = static_cast<int>(i);
    a.position = scenario_.agent_starts[i];
    a.commanded_position = a.position;
    team_.agents.push_back(a);
    commands_.push_back({a.position, Vec3::Zero()});
  }
  team_.refresh();
  last_a_ref_.assign(team_.agents.size(), Vec3::Zero());
  admittance_.p_c = team_.barycenter;
  operator_ = scripted_operator({}, 0.0, team_);
  last_ref_ = team_.barycenter;

  goal_reached_ = (team_.barycenter - goal_).norm() <= scenario_.goal_tolerance;
  last_ = snapshot_record();
  if (keep_trace_) trace_.push_back(last_);
}

void World::attach_live_operator(CommandQueue* queue) {
  live_mode_ = true;
  live_queue_ = queue;
  live_.take_control = false;
  live_.source = OperatorSource::kLive;
}

void World::apply(const OperatorCommand& cmd) {
  live_mode_ = true;
  live_.source = OperatorSource::kLive;
  if (const auto* c = std::get_if<SetControl>(&cmd)) {
    live_.take_control = c->enabled;
    if (c->enabled) {
      live_.p_u = team_.barycenter;
      live_.v_u = Vec3::Zero();
    }
  } else if (const auto* t = std::get_if<SetTarget>(&cmd)) {
    live_.p_u = t->position;
    live_.v_u = t->velocity;
  } else if (const auto* g = std::get_if<SetGoal>(&cmd)) {
    goal_ = g->position;
  }
}

TickRecord World::snapshot_record() const {
  TickRecord rec;
  rec.tick = clock_.tick;
  rec.time = clock_.time();
  rec.agents = team_.agents;
  rec.a_ref = last_a_ref_;
  rec.v_cmd.reserve(commands_.size());
  for (const auto& c : commands_) rec.v_cmd.push_back(c.velocity);
  rec.p_bar = team_.barycenter;
  rec.v_bar = team_.barycenter_velocity;
  rec.p_c = admittance_.p_c;
  rec.v_c = admittance_.v_c;
  rec.p_ref = last_ref_;
  rec.f_usr = last_f_usr_;
  rec.f_rep = last_f_rep_;
  rec.goal = goal_;
  rec.op = operator_;
  rec.goal_reached = goal_reached_;
  return rec;
}

void World::check_finite(const TickRecord& rec) const {
  auto bad = [](const Vec3& v) { return !v.allFinite(); };
  bool ok = !bad(rec.p_c) && !bad(rec.v_c) && !bad(rec.f_usr) && !bad(rec.f_rep);
  for (const auto& a : rec.agents) ok = ok && all_finite(a);
  if (ok) return;
  std::ostringstream os;
  os << "non-finite state at tick " << rec.tick << " (t=" << rec.time << ")\n"
     << "  p_c=" << dump_vec(rec.p_c) << " v_c=" << dump_vec(rec.v_c) << "\n"
     << "  f_usr=" << dump_vec(rec.f_usr) << " f_rep=" << dump_vec(rec.f_rep) << "\n";
  for (const auto& a : rec.agents)
    os << "  agent " << a.id << " p=" << dump_vec(a.position) << " v=" << dump_vec(a.velocity)
       << " cmd=" << dump_vec(a.commanded_position) << "\n";
  throw SimulationError(os.str());
}

const TickRecord& World::step() {
  const Scenario& sc = scenario_;
  const double dt = clock_.dt;
  const double t = clock_.time();

  // (1) operator input
  if (live_queue_ != nullptr)
    for (const auto& cmd : live_queue_->drain()) apply(cmd);
  if (live_mode_) {
    operator_ = live_;
    if (!operator_.take_control) {
      operator_.p_u = team_.barycenter;
      operator_.v_u = team_.barycenter_velocity;
    }
  } else {
    operator_ = scripted_operator(sc.operator_script, t, team_);
    if (operator_.take_control && sc.sim.operator_jitter > 0.0) {
      std::normal_distribution<double> noise(0.0, sc.sim.operator_jitter);
      for (int a = 0; a < 3; ++a) operator_.p_u[a] += noise(rng_);
    }
  }

  // (2) perception
  std::vector<VoxelKey> discovered =
      discover(truth_, known_, team_.agents.front().position, sc.repulsion.horizon);

  // (3) replanning
  const UserForce f_usr = user_force(team_.barycenter, team_.barycenter_velocity, operator_.p_u,
                                     operator_.v_u, sc.admittance, operator_.take_control);
  std::optional<PlanEvent> plan_event;
  if (replan_due(clock_, sc.sim.replan_period)) {
    PlannerParams pp = sc.planner;
    UserForce planner_force = f_usr;
    if (sc.mode == Mode::kBaseline) {
      pp.rho_usr = 0.0;
      planner_force = UserForce{};
    }
    PlanEvent ev;
    ev.plan_time = t;
    ev.virtual_goal = project_goal(team_.barycenter, goal_, pp.horizon);
    ev.user_force = planner_force.vector;
    ev.path = plan({team_.barycenter, team_.barycenter_velocity}, ev.virtual_goal, known_,
                   planner_force, pp, sc.repulsion);
    path_ = ev.path;
    plan_times_.push_back(t);
    plan_event = std::move(ev);
  }

  // (4)-(5) admittance on the migration point
  const Vec3 f_rep = repulsion_force(admittance_.p_c, known_, sc.repulsion);
  const Vec3 f_v = f_usr.vector + f_rep;
  const ReferenceSample ref = project_reference(team_.barycenter, path_, sc.admittance.lookahead, dt);
  admittance_ = teamnav::step(admittance_, ref, f_v, sc.admittance, dt);

  // (6) flocking commands from an immutable snapshot of the team
  const TeamState snapshot = team_;
  for (std::size_t i = 0; i < snapshot.agents.size(); ++i) {
    const Vec3 rep_i = repulsion_force(snapshot.agents[i].position, known_, sc.repulsion);
    last_a_ref_[i] = reference_accel(i, snapshot, admittance_.p_c, admittance_.v_c, rep_i,
                                     sc.flocking, &flock_diag_);
  }
  for (std::size_t i = 0; i < team_.agents.size(); ++i)
    team_.agents[i].commanded_position = integrate_command(commands_[i], last_a_ref_[i], dt, sc.flocking);

  // (7) agent dynamics: saturated PD tracking of the commanded position
  for (std::size_t i = 0; i < team_.agents.size(); ++i) {
    AgentState& a = team_.agents[i];
    const Vec3 accel = clamp_norm(sc.sim.k_track_p * (commands_[i].position - a.position) +
                                      sc.sim.k_track_d * (commands_[i].velocity - a.velocity),
                                  sc.flocking.a_max);
    a.acceleration = accel;
    a.velocity = clamp_norm(a.velocity + accel * dt, sc.flocking.v_max);
    a.position += a.velocity * dt;
  }
  team_.refresh();
  ++clock_.tick;

  last_ref_ = ref.p_r;
  last_f_usr_ = f_usr.vector;
  last_f_rep_ = f_rep;

  // (9) termination
  if (!goal_reached_) goal_reached_ = (team_.barycenter - goal_).norm() <= sc.goal_tolerance;

  // (8) bookkeeping
  last_ = snapshot_record();
  last_.new_voxels = std::move(discovered);
  last_.plan = std::move(plan_event);
  check_finite(last_);
  if (keep_trace_) trace_.push_back(last_);
  return last_;
}

MetricsReport World::run() {
  while (!finished()) step();
  return metrics();
}

MetricsReport World::metrics() const {
  MetricsReport report = compute_metrics(trace_, truth_);
  report.timeout = !goal_reached_;
  return report;
}

MetricsReport compute_metrics(std::span<const TickRecord> trace, const VoxelMap& truth) {
  if (trace.empty()) throw std::invalid_argument("compute_metrics: empty trace");
  MetricsReport m;
  const std::size_t n_agents = trace.front().agents.size();

  double length_sum = 0.0;
  for (std::size_t i = 0; i < n_agents; ++i) {
    double len = 0.0;
    for (std::size_t k = 1; k < trace.size(); ++k)
      len += (trace[k].agents[i].position - trace[k - 1].agents[i].position).norm();
    length_sum += len;
  }
  m.avg_distance_traveled = n_agents ? length_sum / static_cast<double>(n_agents) : 0.0;

  const TickRecord* reached = nullptr;
  for (const auto& rec : trace)
    if (rec.goal_reached) {
      reached = &rec;
      break;
    }
  m.timeout = reached == nullptr;
  m.time_to_goal = reached ? reached->time : trace.back().time;
  m.mean_velocity = m.time_to_goal > 0.0 ? m.avg_distance_traveled / m.time_to_goal : 0.0;

  constexpr double kInf = std::numeric_limits<double>::infinity();
  m.min_obstacle_distance = kInf;
  m.min_inter_agent_distance = kInf;
  for (const auto& rec : trace) {
    for (std::size_t i = 0; i < rec.agents.size(); ++i) {
      m.min_obstacle_distance =
          std::min(m.min_obstacle_distance, nearest_occupied_distance(rec.agents[i].position, truth));
      for (std::size_t j = i + 1; j < rec.agents.size(); ++j)
        m.min_inter_agent_distance = std::min(
            m.min_inter_agent_distance, (rec.agents[i].position - rec.agents[j].position).norm());
    }
  }

  // Time average over the stepped intervals; the first record is the
  // initial state and carries no applied force.
  if (trace.size() > 1) {
    double sum = 0.0;
    for (std::size_t k = 1; k < trace.size(); ++k) sum += trace[k].f_usr.norm();
    m.avg_user_force = sum / static_cast<double>(trace.size() - 1);
  }
  return m;
}

}  // namespace teamnav
