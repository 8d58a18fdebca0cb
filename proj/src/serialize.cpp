#include "teamnav/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

namespace teamnav {

json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected [x, y, z]");
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[static_cast<std::size_t>(i)].is_number()) throw std::invalid_argument("expected a number");
    v[i] = j[static_cast<std::size_t>(i)].get<double>();
  }
  if (!v.allFinite()) throw std::invalid_argument("non-finite vector");
  return v;
}

json to_json(const PlannedPath& path) {
  json prims = json::array();
  for (const auto& p : path.primitives)
    prims.push_back({{"p0", to_json(p.start_position)},
                     {"v0", to_json(p.start_velocity)},
                     {"u", to_json(p.control)},
                     {"dt", p.duration}});
  return {{"primitives", std::move(prims)},
          {"total_duration", path.total_duration},
          {"total_cost", path.total_cost},
          {"partial", path.partial}};
}

PlannedPath path_from_json(const json& j) {
  PlannedPath path;
  for (const auto& p : j.at("primitives"))
    path.primitives.push_back({vec3_from_json(p.at("p0")), vec3_from_json(p.at("v0")),
                               vec3_from_json(p.at("u")), p.at("dt").get<double>()});
  path.total_duration = j.at("total_duration").get<double>();
  path.total_cost = j.at("total_cost").get<double>();
  path.partial = j.at("partial").get<bool>();
  return path;
}

std::vector<Vec3> sample_path(const PlannedPath& path, double step) {
  std::vector<Vec3> out;
  if (path.empty()) return out;
  const auto n = static_cast<long>(std::ceil(path.total_duration / step - 1e-9));
  for (long k = 0; k < n; ++k) out.push_back(path.position(static_cast<double>(k) * step));
  out.push_back(path.position(path.total_duration));
  return out;
}

TraceHeader make_header(const World& world) {
  const Scenario& s = world.scenario();
  TraceHeader h;
  h.scenario = s.name;
  h.mode = std::string(to_string(s.mode));
  h.dt = s.sim.dt;
  h.resolution = s.sim.resolution;
  h.origin = s.sim.origin;
  h.goal = s.goal;
  h.goal_tolerance = s.goal_tolerance;
  h.agents = static_cast<int>(s.agent_starts.size());
  return h;
}

json to_json(const TraceHeader& h) {
  return {{"type", "header"},     {"version", 1},         {"scenario", h.scenario},
          {"mode", h.mode},       {"dt", h.dt},           {"resolution", h.resolution},
          {"origin", to_json(h.origin)}, {"goal", to_json(h.goal)},
          {"goal_tolerance", h.goal_tolerance}, {"agents", h.agents}};
}

json to_json(const TickRecord& rec) {
  json agents = json::array();
  for (std::size_t i = 0; i < rec.agents.size(); ++i) {
    const auto& a = rec.agents[i];
    json ja = {{"id", a.id},
               {"p", to_json(a.position)},
               {"v", to_json(a.velocity)},
               {"a", to_json(a.acceleration)},
               {"cmd", to_json(a.commanded_position)}};
    if (i < rec.a_ref.size()) ja["a_ref"] = to_json(rec.a_ref[i]);
    if (i < rec.v_cmd.size()) ja["v_cmd"] = to_json(rec.v_cmd[i]);
    agents.push_back(std::move(ja));
  }
  json j = {{"type", "tick"},
            {"tick", rec.tick},
            {"time", rec.time},
            {"agents", std::move(agents)},
            {"p_bar", to_json(rec.p_bar)},
            {"v_bar", to_json(rec.v_bar)},
            {"p_c", to_json(rec.p_c)},
            {"v_c", to_json(rec.v_c)},
            {"p_ref", to_json(rec.p_ref)},
            {"f_usr", to_json(rec.f_usr)},
            {"f_rep", to_json(rec.f_rep)},
            {"goal", to_json(rec.goal)},
            {"op",
             {{"p_u", to_json(rec.op.p_u)},
              {"v_u", to_json(rec.op.v_u)},
              {"take_control", rec.op.take_control},
              {"source", rec.op.source == OperatorSource::kLive ? "live" : "scripted"}}},
            {"goal_reached", rec.goal_reached}};
  if (!rec.new_voxels.empty()) {
    json vox = json::array();
    for (const auto& k : rec.new_voxels) vox.push_back({k.x, k.y, k.z});
    j["voxels"] = std::move(vox);
  }
  if (rec.plan) {
    j["plan"] = {{"plan_time", rec.plan->plan_time},
                 {"virtual_goal", to_json(rec.plan->virtual_goal)},
                 {"user_force", to_json(rec.plan->user_force)},
                 {"path", to_json(rec.plan->path)}};
  }
  return j;
}

TickRecord tick_from_json(const json& j) {
  TickRecord rec;
  rec.tick = j.at("tick").get<std::int64_t>();
  rec.time = j.at("time").get<double>();
  for (const auto& ja : j.at("agents")) {
    AgentState a;
    a.id = ja.at("id").get<int>();
    a.position = vec3_from_json(ja.at("p"));
    a.velocity = vec3_from_json(ja.at("v"));
    a.acceleration = vec3_from_json(ja.at("a"));
    a.commanded_position = vec3_from_json(ja.at("cmd"));
    rec.agents.push_back(a);
    if (ja.contains("a_ref")) rec.a_ref.push_back(vec3_from_json(ja.at("a_ref")));
    if (ja.contains("v_cmd")) rec.v_cmd.push_back(vec3_from_json(ja.at("v_cmd")));
  }
  rec.p_bar = vec3_from_json(j.at("p_bar"));
  rec.v_bar = vec3_from_json(j.at("v_bar"));
  rec.p_c = vec3_from_json(j.at("p_c"));
  rec.v_c = vec3_from_json(j.at("v_c"));
  rec.p_ref = vec3_from_json(j.at("p_ref"));
  rec.f_usr = vec3_from_json(j.at("f_usr"));
  rec.f_rep = vec3_from_json(j.at("f_rep"));
  rec.goal = vec3_from_json(j.at("goal"));
  const json& op = j.at("op");
  rec.op.p_u = vec3_from_json(op.at("p_u"));
  rec.op.v_u = vec3_from_json(op.at("v_u"));
  rec.op.take_control = op.at("take_control").get<bool>();
  rec.op.source = op.at("source").get<std::string>() == "live" ? OperatorSource::kLive
                                                               : OperatorSource::kScripted;
  rec.goal_reached = j.at("goal_reached").get<bool>();
  if (j.contains("voxels"))
    for (const auto& k : j.at("voxels"))
      rec.new_voxels.push_back({k.at(0).get<int>(), k.at(1).get<int>(), k.at(2).get<int>()});
  if (j.contains("plan")) {
    const json& p = j.at("plan");
    rec.plan = PlanEvent{p.at("plan_time").get<double>(), vec3_from_json(p.at("virtual_goal")),
                         vec3_from_json(p.at("user_force")), path_from_json(p.at("path"))};
  }
  return rec;
}

void write_trace(std::ostream& out, const World& world) {
  out << to_json(make_header(world)).dump() << '\n';
  for (const auto& rec : world.trace()) out << to_json(rec).dump() << '\n';
}

Trace read_trace(std::istream& in) {
  Trace trace;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw TraceError(line_no, std::string("malformed JSON: ") + e.what());
    }
    try {
      const std::string type = j.at("type").get<std::string>();
      if (!have_header) {
        if (type != "header") throw std::invalid_argument("first record must be the header");
        TraceHeader& h = trace.header;
        h.scenario = j.at("scenario").get<std::string>();
        h.mode = j.at("mode").get<std::string>();
        h.dt = j.at("dt").get<double>();
        h.resolution = j.at("resolution").get<double>();
        h.origin = vec3_from_json(j.at("origin"));
        h.goal = vec3_from_json(j.at("goal"));
        h.goal_tolerance = j.at("goal_tolerance").get<double>();
        h.agents = j.at("agents").get<int>();
        have_header = true;
        continue;
      }
      if (type != "tick") throw std::invalid_argument("unexpected record type '" + type + "'");
      TickRecord rec = tick_from_json(j);
      if (static_cast<int>(rec.agents.size()) != trace.header.agents)
        throw std::invalid_argument("agent count does not match header");
      if (!trace.records.empty() && rec.tick <= trace.records.back().tick)
        throw std::invalid_argument("ticks must increase");
      trace.records.push_back(std::move(rec));
    } catch (const TraceError&) {
      throw;
    } catch (const std::exception& e) {
      throw TraceError(line_no, e.what());
    }
  }
  if (!have_header) throw TraceError(line_no == 0 ? 1 : line_no, "missing header");
  return trace;
}

std::string metrics_csv_header() {
  return "avg_distance_traveled,time_to_goal,mean_velocity,min_obstacle_distance,"
         "min_inter_agent_distance,avg_user_force,timeout";
}

std::string metrics_csv_row(const MetricsReport& m) {
  auto num = [](double v) {
    if (std::isinf(v)) return std::string(v > 0 ? "inf" : "-inf");
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  return num(m.avg_distance_traveled) + "," + num(m.time_to_goal) + "," + num(m.mean_velocity) +
         "," + num(m.min_obstacle_distance) + "," + num(m.min_inter_agent_distance) + "," +
         num(m.avg_user_force) + "," + (m.timeout ? "1" : "0");
}

void append_metrics_csv(const std::filesystem::path& path, const MetricsReport& m) {
  std::error_code ec;
  const bool fresh = !std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot open metrics file " + path.string());
  if (fresh) out << metrics_csv_header() << '\n';
  out << metrics_csv_row(m) << '\n';
}

}  // namespace teamnav
