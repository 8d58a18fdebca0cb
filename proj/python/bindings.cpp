#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <fstream>

#include "teamnav/admittance.hpp"
#include "teamnav/planner.hpp"
#include "teamnav/scenario.hpp"
#include "teamnav/serialize.hpp"
#include "teamnav/sim.hpp"
#include "teamnav/voxel_map.hpp"

namespace py = pybind11;
using namespace teamnav;

namespace {

py::dict metrics_dict(const MetricsReport& m) {
  py::dict d;
  d["avg_distance_traveled"] = m.avg_distance_traveled;
  d["time_to_goal"] = m.time_to_goal;
  d["mean_velocity"] = m.mean_velocity;
  d["min_obstacle_distance"] = m.min_obstacle_distance;
  d["min_inter_agent_distance"] = m.min_inter_agent_distance;
  d["avg_user_force"] = m.avg_user_force;
  d["timeout"] = m.timeout;
  return d;
}

Eigen::MatrixX3d positions(const TeamState& team) {
  Eigen::MatrixX3d out(static_cast<Eigen::Index>(team.agents.size()), 3);
  for (std::size_t i = 0; i < team.agents.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = team.agents[i].position.transpose();
  return out;
}

py::tuple key_tuple(const VoxelKey& k) { return py::make_tuple(k.x, k.y, k.z); }

}  // namespace

PYBIND11_MODULE(teamnav, m) {
  m.doc() = "Shared-control multi-agent navigation core";

  py::register_exception<ScenarioError>(m, "ScenarioError", PyExc_ValueError);
  py::register_exception<SimulationError>(m, "SimulationError", PyExc_RuntimeError);
  py::register_exception<TraceError>(m, "TraceError", PyExc_ValueError);

  py::class_<RepulsionParams>(m, "RepulsionParams")
      .def(py::init<>())
      .def_readwrite("max_force", &RepulsionParams::max_force)
      .def_readwrite("decay", &RepulsionParams::decay)
      .def_readwrite("horizon", &RepulsionParams::horizon);

  py::class_<VoxelMap>(m, "VoxelMap")
      .def(py::init<double, const Vec3&>(), py::arg("resolution") = 0.2, py::arg("origin") = Vec3(Vec3::Zero()))
      .def_property_readonly("resolution", &VoxelMap::resolution)
      .def("__len__", &VoxelMap::size)
      .def("insert_box", &VoxelMap::insert_box, py::arg("min_corner"), py::arg("max_corner"))
      .def("insert", [](VoxelMap& v, int x, int y, int z) { return v.insert({x, y, z}); })
      .def("contains", [](const VoxelMap& v, int x, int y, int z) { return v.contains({x, y, z}); })
      .def("key_of", [](const VoxelMap& v, const Vec3& p) { return key_tuple(v.key_of(p)); })
      .def("center", [](const VoxelMap& v, int x, int y, int z) { return v.center({x, y, z}); })
      .def("occupied", [](const VoxelMap& v) {
        py::list out;
        for (const auto& k : v.occupied()) out.append(key_tuple(k));
        return out;
      });

  m.def("repulsion_magnitude", &repulsion_magnitude, py::arg("d"), py::arg("params") = RepulsionParams{});
  m.def("repulsion_force", &repulsion_force, py::arg("p"), py::arg("map"),
        py::arg("params") = RepulsionParams{});
  m.def("nearest_occupied_distance", &nearest_occupied_distance);

  py::class_<PlannerParams>(m, "PlannerParams")
      .def(py::init<>())
      .def_readwrite("rho", &PlannerParams::rho)
      .def_readwrite("rho_c", &PlannerParams::rho_c)
      .def_readwrite("rho_usr", &PlannerParams::rho_usr)
      .def_readwrite("tau", &PlannerParams::tau)
      .def_readwrite("horizon", &PlannerParams::horizon)
      .def_readwrite("primitive_dt", &PlannerParams::primitive_dt)
      .def_readwrite("u_max", &PlannerParams::u_max)
      .def_readwrite("v_max", &PlannerParams::v_max)
      .def_readwrite("depth_max", &PlannerParams::depth_max)
      .def_readwrite("goal_tolerance", &PlannerParams::goal_tolerance)
      .def_readwrite("clearance", &PlannerParams::clearance);

  py::class_<MotionPrimitive>(m, "MotionPrimitive")
      .def(py::init([](const Vec3& p0, const Vec3& v0, const Vec3& u, double dt) {
             return MotionPrimitive{p0, v0, u, dt};
           }),
           py::arg("p0"), py::arg("v0"), py::arg("u"), py::arg("dt"))
      .def_readonly("start_position", &MotionPrimitive::start_position)
      .def_readonly("start_velocity", &MotionPrimitive::start_velocity)
      .def_readonly("control", &MotionPrimitive::control)
      .def_readonly("duration", &MotionPrimitive::duration)
      .def("position", &MotionPrimitive::position)
      .def("velocity", &MotionPrimitive::velocity);

  py::class_<PlannedPath>(m, "PlannedPath")
      .def(py::init([](std::vector<MotionPrimitive> prims) {
             PlannedPath p;
             p.primitives = std::move(prims);
             p.retime();
             return p;
           }),
           py::arg("primitives"))
      .def_readonly("primitives", &PlannedPath::primitives)
      .def_readonly("total_duration", &PlannedPath::total_duration)
      .def_readonly("total_cost", &PlannedPath::total_cost)
      .def_readonly("partial", &PlannedPath::partial)
      .def("position", &PlannedPath::position)
      .def("velocity", &PlannedPath::velocity)
      .def("sample", [](const PlannedPath& p, double step) { return sample_path(p, step); },
           py::arg("step") = 0.1);

  m.def(
      "plan",
      [](const Vec3& p0, const Vec3& v0, const Vec3& goal, const VoxelMap& map, const Vec3& force,
         const PlannerParams& pp, const RepulsionParams& rp) {
        py::gil_scoped_release release;
        return plan({p0, v0}, goal, map, UserForce{force}, pp, rp);
      },
      py::arg("start"), py::arg("velocity"), py::arg("goal"), py::arg("map"),
      py::arg("user_force") = Vec3(Vec3::Zero()), py::arg("params") = PlannerParams{},
      py::arg("repulsion") = RepulsionParams{});
  m.def(
      "user_cost",
      [](const PlannedPath& p, const Vec3& f, double tau) { return user_cost(p, UserForce{f}, tau); },
      py::arg("path"), py::arg("force"), py::arg("tau") = 0.8);

  py::class_<AdmittanceParams>(m, "AdmittanceParams")
      .def(py::init<>())
      .def_readwrite("mass", &AdmittanceParams::mass)
      .def_readwrite("damping", &AdmittanceParams::damping)
      .def_readwrite("stiffness", &AdmittanceParams::stiffness)
      .def_readwrite("lookahead", &AdmittanceParams::lookahead);

  m.def(
      "admittance_step",
      [](const Vec3& p_c, const Vec3& v_c, const Vec3& p_r, const Vec3& v_r, const Vec3& force,
         const AdmittanceParams& ap, double dt) {
        const AdmittanceState s = step({p_c, v_c}, {p_r, v_r, Vec3::Zero(), 0.0}, force, ap, dt);
        return py::make_tuple(s.p_c, s.v_c);
      },
      py::arg("p_c"), py::arg("v_c"), py::arg("p_r"), py::arg("v_r"), py::arg("force"),
      py::arg("params") = AdmittanceParams{}, py::arg("dt") = 0.02);

  py::class_<Scenario>(m, "Scenario")
      .def_readwrite("name", &Scenario::name)
      .def_readwrite("goal", &Scenario::goal)
      .def_readwrite("goal_tolerance", &Scenario::goal_tolerance)
      .def_readwrite("duration_max", &Scenario::duration_max)
      .def_readwrite("agent_starts", &Scenario::agent_starts)
      .def_readwrite("planner", &Scenario::planner)
      .def_readwrite("admittance", &Scenario::admittance)
      .def_readwrite("repulsion", &Scenario::repulsion)
      .def_property(
          "mode", [](const Scenario& s) { return std::string(to_string(s.mode)); },
          [](Scenario& s, const std::string& v) { s.mode = parse_mode(v); })
      .def_property(
          "seed", [](const Scenario& s) { return s.sim.seed; },
          [](Scenario& s, std::uint64_t v) { s.sim.seed = v; })
      .def("truth_map", &Scenario::build_truth_map);

  m.def("load_scenario", [](const std::string& text) { return load_scenario(text); });
  m.def("load_scenario_file", [](const std::filesystem::path& p) { return load_scenario_file(p); });

  py::class_<World>(m, "World")
      .def(py::init<Scenario>())
      .def("step", [](World& w) { return w.step().time; })
      .def("run",
           [](World& w) {
             MetricsReport r;
             {
               py::gil_scoped_release release;
               r = w.run();
             }
             return metrics_dict(r);
           })
      .def("metrics", [](const World& w) { return metrics_dict(w.metrics()); })
      .def_property_readonly("time", &World::time)
      .def_property_readonly("goal_reached", &World::goal_reached)
      .def_property_readonly("finished", &World::finished)
      .def_property_readonly("plan_times", &World::plan_times)
      .def_property_readonly("goal", &World::goal)
      .def_property_readonly("barycenter", [](const World& w) { return w.team().barycenter; })
      .def_property_readonly("positions", [](const World& w) { return positions(w.team()); })
      .def_property_readonly("migration_point", [](const World& w) { return w.migration().p_c; })
      .def_property_readonly("known_voxels", [](const World& w) { return w.known_map().size(); })
      .def_property_readonly("operator_target", [](const World& w) { return w.operator_input().p_u; })
      .def("set_control", [](World& w, bool on) { w.apply(SetControl{on}); })
      .def("set_target", [](World& w, const Vec3& p, const Vec3& v) { w.apply(SetTarget{p, v}); },
           py::arg("position"), py::arg("velocity") = Vec3(Vec3::Zero()))
      .def("set_goal", [](World& w, const Vec3& p) { w.apply(SetGoal{p}); })
      .def("write_trace", [](const World& w, const std::filesystem::path& path) {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot open " + path.string());
        write_trace(out, w);
      });

  m.def("read_trace", [](const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    const Trace t = read_trace(in);
    py::dict d;
    d["scenario"] = t.header.scenario;
    d["mode"] = t.header.mode;
    d["agents"] = t.header.agents;
    d["ticks"] = t.records.size();
    std::vector<double> times;
    for (const auto& r : t.records) times.push_back(r.time);
    d["times"] = times;
    return d;
  });
  m.def("metrics_csv_header", &metrics_csv_header);
}
