#include "teamnav/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace teamnav {

std::string_view to_string(Mode mode) { return mode == Mode::kBaseline ? "baseline" : "shared"; }

Mode parse_mode(std::string_view text) {
  if (text == "baseline") return Mode::kBaseline;
  if (text == "shared") return Mode::kShared;
  throw ScenarioError("mode: expected 'baseline' or 'shared', got '" + std::string(text) + "'");
}

void SimParams::validate() const {
  if (!(dt > 0.0)) throw ScenarioError("params.sim.dt: must be > 0");
  if (!(replan_period > 0.0)) throw ScenarioError("params.sim.replan_period: must be > 0");
  if (!(resolution > 0.0)) throw ScenarioError("params.sim.resolution: must be > 0");
  if (!(k_track_p >= 0.0) || !(k_track_d >= 0.0)) throw ScenarioError("params.sim: tracking gains must be >= 0");
  if (!(operator_jitter >= 0.0)) throw ScenarioError("params.sim.operator_jitter: must be >= 0");
}

namespace {

// Fields of a mapping are consumed as they are read; anything left over is
// an unknown key.
class Fields {
 public:
  Fields(const YAML::Node& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.IsMap()) throw ScenarioError(path_ + ": expected a mapping");
    for (const auto& kv : node_) keys_.insert(kv.first.as<std::string>());
  }

  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  bool has(const std::string& key) const { return keys_.count(key) != 0; }

  YAML::Node take(const std::string& key) {
    used_.insert(key);
    return node_[key];
  }

  void finish() const {
    for (const auto& k : keys_)
      if (!used_.count(k)) throw ScenarioError(field(k) + ": unknown key");
  }

 private:
  YAML::Node node_;
  std::string path_;
  std::set<std::string> keys_;
  std::set<std::string> used_;
};

double as_double(const YAML::Node& n, const std::string& field) {
  try {
    const double v = n.as<double>();
    if (!std::isfinite(v)) throw ScenarioError(field + ": must be finite");
    return v;
  } catch (const YAML::Exception&) {
    throw ScenarioError(field + ": expected a number");
  }
}

int as_int(const YAML::Node& n, const std::string& field) {
  try {
    return n.as<int>();
  } catch (const YAML::Exception&) {
    throw ScenarioError(field + ": expected an integer");
  }
}

Vec3 as_vec3(const YAML::Node& n, const std::string& field) {
  if (!n.IsSequence() || n.size() != 3) throw ScenarioError(field + ": expected [x, y, z]");
  return {as_double(n[0], field + "[0]"), as_double(n[1], field + "[1]"),
          as_double(n[2], field + "[2]")};
}

/// Diagonal gains accept a scalar (isotropic) or a 3-vector.
Vec3 as_diag(const YAML::Node& n, const std::string& field) {
  if (n.IsScalar()) return Vec3::Constant(as_double(n, field));
  return as_vec3(n, field);
}

void read(Fields& f, const std::string& key, double& out) {
  if (f.has(key)) out = as_double(f.take(key), f.field(key));
}
void read(Fields& f, const std::string& key, int& out) {
  if (f.has(key)) out = as_int(f.take(key), f.field(key));
}

void read_planner(const YAML::Node& n, PlannerParams& p) {
  Fields f(n, "params.planner");
  read(f, "rho", p.rho);
  read(f, "rho_c", p.rho_c);
  read(f, "rho_usr", p.rho_usr);
  read(f, "tau", p.tau);
  read(f, "horizon", p.horizon);
  read(f, "primitive_dt", p.primitive_dt);
  read(f, "u_max", p.u_max);
  read(f, "v_max", p.v_max);
  read(f, "control_levels", p.control_levels);
  read(f, "depth_max", p.depth_max);
  read(f, "clearance", p.clearance);
  read(f, "position_quantum", p.position_quantum);
  read(f, "velocity_quantum", p.velocity_quantum);
  if (f.has("max_expansions")) p.max_expansions = as_int(f.take("max_expansions"), f.field("max_expansions"));
  f.finish();
}

void read_admittance(const YAML::Node& n, AdmittanceParams& p) {
  Fields f(n, "params.admittance");
  if (f.has("M")) p.mass = as_diag(f.take("M"), f.field("M"));
  if (f.has("D")) p.damping = as_diag(f.take("D"), f.field("D"));
  if (f.has("K")) p.stiffness = as_diag(f.take("K"), f.field("K"));
  if (f.has("K_p_usr")) p.user_kp = as_diag(f.take("K_p_usr"), f.field("K_p_usr"));
  if (f.has("K_d_usr")) p.user_kd = as_diag(f.take("K_d_usr"), f.field("K_d_usr"));
  read(f, "user_force_sign", p.user_force_sign);
  read(f, "lookahead", p.lookahead);
  if (f.has("integrator")) {
    const auto s = f.take("integrator").as<std::string>();
    if (s == "exact") p.integrator = AdmittanceIntegrator::kExact;
    else if (s == "semi_implicit") p.integrator = AdmittanceIntegrator::kSemiImplicit;
    else throw ScenarioError(f.field("integrator") + ": expected 'exact' or 'semi_implicit'");
  }
  f.finish();
}

void read_flocking(const YAML::Node& n, FlockParams& p) {
  Fields f(n, "params.flocking");
  read(f, "alpha", p.alpha);
  read(f, "beta", p.beta);
  read(f, "K_p", p.k_p);
  read(f, "K_v", p.k_v);
  read(f, "R", p.radius);
  read(f, "epsilon", p.epsilon);
  read(f, "h_bump", p.h_bump);
  read(f, "d_ref", p.d_ref);
  read(f, "a_max", p.a_max);
  read(f, "v_max", p.v_max);
  f.finish();
}

void read_repulsion(const YAML::Node& n, RepulsionParams& p) {
  Fields f(n, "params.repulsion");
  read(f, "F_s", p.max_force);
  read(f, "lambda", p.decay);
  read(f, "horizon", p.horizon);
  f.finish();
}

void read_sim(const YAML::Node& n, SimParams& p) {
  Fields f(n, "params.sim");
  read(f, "dt", p.dt);
  read(f, "k_track_p", p.k_track_p);
  read(f, "k_track_d", p.k_track_d);
  read(f, "replan_period", p.replan_period);
  read(f, "resolution", p.resolution);
  if (f.has("origin")) p.origin = as_vec3(f.take("origin"), f.field("origin"));
  read(f, "operator_jitter", p.operator_jitter);
  if (f.has("seed")) p.seed = static_cast<std::uint64_t>(as_int(f.take("seed"), f.field("seed")));
  f.finish();
}

std::vector<Waypoint> read_script(const YAML::Node& n, const std::string& path) {
  if (!n.IsSequence()) throw ScenarioError(path + ": expected a list");
  std::vector<Waypoint> out;
  for (std::size_t i = 0; i < n.size(); ++i) {
    Fields f(n[i], path + "[" + std::to_string(i) + "]");
    if (!f.has("t")) throw ScenarioError(f.field("t") + ": missing");
    if (!f.has("p")) throw ScenarioError(f.field("p") + ": missing");
    Waypoint w{as_double(f.take("t"), f.field("t")), as_vec3(f.take("p"), f.field("p"))};
    f.finish();
    if (!out.empty() && w.time < out.back().time)
      throw ScenarioError(f.field("t") + ": waypoints must be sorted by time");
    out.push_back(w);
  }
  return out;
}

YAML::Node parse_yaml(std::string_view text) {
  try {
    return YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw ScenarioError(std::string("malformed document: ") + e.what());
  }
}

}  // namespace

Scenario load_scenario(std::string_view text) {
  const YAML::Node root = parse_yaml(text);
  Scenario s;
  Fields f(root, "");

  if (f.has("name")) s.name = f.take("name").as<std::string>();
  if (f.has("mode")) s.mode = parse_mode(f.take("mode").as<std::string>());

  if (!f.has("goal")) throw ScenarioError("goal: missing");
  s.goal = as_vec3(f.take("goal"), "goal");
  if (f.has("goal_tolerance")) s.goal_tolerance = as_double(f.take("goal_tolerance"), "goal_tolerance");
  if (f.has("duration_max")) s.duration_max = as_double(f.take("duration_max"), "duration_max");

  if (!f.has("agents")) throw ScenarioError("agents: missing");
  const YAML::Node agents = f.take("agents");
  if (!agents.IsSequence()) throw ScenarioError("agents: expected a list of [x, y, z]");
  for (std::size_t i = 0; i < agents.size(); ++i)
    s.agent_starts.push_back(as_vec3(agents[i], "agents[" + std::to_string(i) + "]"));

  if (f.has("obstacles")) {
    const YAML::Node obstacles = f.take("obstacles");
    if (!obstacles.IsSequence()) throw ScenarioError("obstacles: expected a list");
    for (std::size_t i = 0; i < obstacles.size(); ++i) {
      const std::string path = "obstacles[" + std::to_string(i) + "]";
      Fields bf(obstacles[i], path);
      if (!bf.has("min")) throw ScenarioError(bf.field("min") + ": missing");
      if (!bf.has("max")) throw ScenarioError(bf.field("max") + ": missing");
      Box b{as_vec3(bf.take("min"), bf.field("min")), as_vec3(bf.take("max"), bf.field("max"))};
      bf.finish();
      for (int a = 0; a < 3; ++a)
        if (b.min[a] > b.max[a]) throw ScenarioError(path + ": min exceeds max on axis " + std::to_string(a));
      s.obstacles.push_back(b);
    }
  }

  if (f.has("workspace")) {
    Fields wf(f.take("workspace"), "workspace");
    if (wf.has("min")) s.planner.workspace_min = as_vec3(wf.take("min"), wf.field("min"));
    if (wf.has("max")) s.planner.workspace_max = as_vec3(wf.take("max"), wf.field("max"));
    wf.finish();
    for (int a = 0; a < 3; ++a)
      if (s.planner.workspace_min[a] > s.planner.workspace_max[a])
        throw ScenarioError("workspace: min exceeds max on axis " + std::to_string(a));
  }

  if (f.has("operator_script")) s.operator_script = read_script(f.take("operator_script"), "operator_script");

  if (f.has("params")) {
    Fields pf(f.take("params"), "params");
    if (pf.has("planner")) read_planner(pf.take("planner"), s.planner);
    if (pf.has("admittance")) read_admittance(pf.take("admittance"), s.admittance);
    if (pf.has("flocking")) read_flocking(pf.take("flocking"), s.flocking);
    if (pf.has("repulsion")) read_repulsion(pf.take("repulsion"), s.repulsion);
    if (pf.has("sim")) read_sim(pf.take("sim"), s.sim);
    pf.finish();
  }
  f.finish();

  s.planner.goal_tolerance = s.goal_tolerance;
  s.validate();
  return s;
}

void Scenario::validate() const {
  if (agent_starts.empty()) throw ScenarioError("agents: at least one agent required");
  if (!goal.allFinite()) throw ScenarioError("goal: must be finite");
  if (!(goal_tolerance >= 0.0)) throw ScenarioError("goal_tolerance: must be >= 0");
  if (!(duration_max > 0.0)) throw ScenarioError("duration_max: must be > 0");

  auto wrap = [](const char* field, auto&& fn) {
    try {
      fn();
    } catch (const std::invalid_argument& e) {
      throw ScenarioError(std::string(field) + ": " + e.what());
    }
  };
  wrap("params.planner", [&] { planner.validate(); });
  wrap("params.admittance", [&] { admittance.validate(); });
  wrap("params.flocking", [&] { flocking.validate(); });
  wrap("params.repulsion", [&] { repulsion.validate(); });
  sim.validate();

  // Two starts closer than the collision clearance overlap.
  for (std::size_t i = 0; i < agent_starts.size(); ++i)
    for (std::size_t j = i + 1; j < agent_starts.size(); ++j)
      if ((agent_starts[i] - agent_starts[j]).norm() < planner.clearance)
        throw ScenarioError("agents[" + std::to_string(j) + "]: overlaps agents[" + std::to_string(i) + "]");

  const VoxelMap truth = build_truth_map();
  for (std::size_t i = 0; i < agent_starts.size(); ++i)
    if (nearest_occupied_distance(agent_starts[i], truth) < planner.clearance)
      throw ScenarioError("agents[" + std::to_string(i) + "]: start is inside an obstacle clearance");
}

VoxelMap Scenario::build_truth_map() const {
  VoxelMap map(sim.resolution, sim.origin);
  for (const auto& b : obstacles) map.insert_box(b.min, b.max);
  return map;
}

Scenario load_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  Scenario s = load_scenario(buf.str());
  if (s.name.empty()) s.name = path.stem().string();
  return s;
}

std::vector<Waypoint> load_operator_script_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open operator script " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const YAML::Node root = parse_yaml(buf.str());
  if (root.IsMap()) {
    Fields f(root, "");
    if (!f.has("operator_script")) throw ScenarioError("operator_script: missing");
    auto script = read_script(f.take("operator_script"), "operator_script");
    f.finish();
    return script;
  }
  return read_script(root, "operator_script");
}

}  // namespace teamnav
