#include <doctest.h>

#include "teamnav/operator.hpp"
#include "teamnav/scenario.hpp"

using namespace teamnav;

TEST_CASE("minimal document gets defaults") {
  const Scenario s = load_scenario("goal: [3, 0, 1]\nagents:\n  - [0, 0, 1]\n");
  CHECK(s.agent_starts.size() == 1);
  CHECK(s.obstacles.empty());
  CHECK(s.mode == Mode::kShared);
  CHECK(s.goal_tolerance == 0.5);
  CHECK(s.duration_max == 120.0);
  CHECK(s.planner.rho == 1.5);
  CHECK(s.planner.rho_usr == 35.0);
  CHECK(s.planner.primitive_dt == 1.3);
  CHECK(s.repulsion.max_force == 25.0);
  CHECK(s.repulsion.decay == 0.55);
  CHECK(s.flocking.d_ref == 1.5);
  CHECK(s.admittance.mass == Vec3::Constant(1.5));
  CHECK(s.sim.dt == 0.02);
  CHECK(s.sim.seed == 42);
}

TEST_CASE("gap scenario document") {
  const Scenario s = load_scenario_file(TEAMNAV_SCENARIO_DIR "/gap_shared.yaml");
  CHECK(s.obstacles.size() == 2);
  CHECK(s.agent_starts.size() == 3);
  CHECK(s.goal == Vec3(5.5, -0.1, 1.0));
  CHECK(s.mode == Mode::kShared);
  CHECK(load_scenario_file(TEAMNAV_SCENARIO_DIR "/gap_baseline.yaml").mode == Mode::kBaseline);
}

TEST_CASE("parameter overrides") {
  const Scenario s = load_scenario(R"(
goal: [1, 0, 1]
agents: [[0, 0, 1]]
params:
  planner: {rho_usr: 10, depth_max: 4}
  admittance: {M: [1, 2, 3], K: 5, integrator: semi_implicit}
  flocking: {d_ref: 1.2}
  repulsion: {F_s: 20}
  sim: {seed: 7, dt: 0.01}
)");
  CHECK(s.planner.rho_usr == 10.0);
  CHECK(s.planner.depth_max == 4);
  CHECK(s.admittance.mass == Vec3(1, 2, 3));
  CHECK(s.admittance.stiffness == Vec3::Constant(5));
  CHECK(s.admittance.integrator == AdmittanceIntegrator::kSemiImplicit);
  CHECK(s.flocking.d_ref == 1.2);
  CHECK(s.repulsion.max_force == 20.0);
  CHECK(s.sim.seed == 7);
  CHECK(s.sim.dt == 0.01);
}

TEST_CASE("validation errors name the field") {
  CHECK_THROWS_WITH_AS(load_scenario("goal: [1, 0, 1]\nagents: [[0, 0, 1]]\ncolour: red\n"),
                       doctest::Contains("colour"), ScenarioError);
  CHECK_THROWS_WITH_AS(load_scenario("goal: [1, 0, 1]\nagents: [[0, 0, 1]]\nparams: {planner: {rhoo: 1}}\n"),
                       doctest::Contains("params.planner.rhoo"), ScenarioError);
  CHECK_THROWS_WITH_AS(load_scenario("goal: [1, 0]\nagents: [[0, 0, 1]]\n"), doctest::Contains("goal"),
                       ScenarioError);
  CHECK_THROWS_WITH_AS(load_scenario("goal: [1, 0, 1]\nagents: [[0, 0, x]]\n"), doctest::Contains("agents[0]"),
                       ScenarioError);
  CHECK_THROWS_WITH_AS(load_scenario("agents: [[0, 0, 1]]\n"), doctest::Contains("goal"), ScenarioError);
  CHECK_THROWS_WITH_AS(load_scenario("goal: [1, 0, 1]\nagents: []\n"), doctest::Contains("agents"), ScenarioError);
  CHECK_THROWS_AS(load_scenario("goal: [1, 0, 1]\nagents: [[0, 0, 1]]\nmode: hybrid\n"), ScenarioError);
  CHECK_THROWS_AS(load_scenario("goal: [1, 0, 1\n"), ScenarioError);
}

TEST_CASE("overlapping agent starts are rejected") {
  CHECK_THROWS_WITH_AS(load_scenario("goal: [1, 0, 1]\nagents: [[0, 0, 1], [0, 0, 1]]\n"),
                       doctest::Contains("agents"), ScenarioError);
  CHECK_THROWS_AS(load_scenario("goal: [3, 0, 1]\nagents: [[0, 0, 1]]\n"
                                "obstacles: [{min: [-0.2, -0.2, 0.8], max: [0.2, 0.2, 1.2]}]\n"),
                  ScenarioError);
}

TEST_CASE("operator script must be sorted") {
  CHECK_THROWS_AS(load_scenario("goal: [1, 0, 1]\nagents: [[0, 0, 1]]\n"
                                "operator_script: [{t: 2, p: [0, 0, 1]}, {t: 1, p: [1, 0, 1]}]\n"),
                  ScenarioError);
}

TEST_CASE("scripted operator") {
  TeamState team;
  AgentState a;
  a.position = Vec3(1, 2, 1);
  team.agents.push_back(a);
  team.refresh();

  SUBCASE("empty script") {
    for (double t : {0.0, 5.0, 100.0}) {
      const OperatorInput in = scripted_operator({}, t, team);
      CHECK_FALSE(in.take_control);
      CHECK(in.p_u == team.barycenter);
    }
  }
  SUBCASE("single waypoint") {
    const std::vector<Waypoint> s{{1.0, Vec3(3, 0, 1)}};
    CHECK_FALSE(scripted_operator(s, 0.5, team).take_control);
    const OperatorInput in = scripted_operator(s, 4.0, team);
    CHECK(in.take_control);
    CHECK(in.p_u == Vec3(3, 0, 1));
    CHECK(in.v_u.isZero());
  }
  SUBCASE("linear segment") {
    const std::vector<Waypoint> s{{0.0, Vec3(0, 0, 1)}, {2.0, Vec3(1, 0, 1)}};
    const OperatorInput in = scripted_operator(s, 1.0, team);
    CHECK(in.p_u.isApprox(Vec3(0.5, 0, 1)));
    CHECK(in.v_u.norm() == doctest::Approx(0.5));
    CHECK(scripted_operator(s, 3.0, team).v_u.isZero());
  }
}

TEST_CASE("truth map from boxes") {
  const Scenario s = load_scenario("goal: [3, 0, 1]\nagents: [[0, 0, 1]]\n"
                                   "obstacles: [{min: [2, 0, 0], max: [3, 1, 1]}]\n");
  CHECK(s.build_truth_map().size() == 125);
}
