#include <doctest.h>

#include <cmath>
#include <sstream>

#include "teamnav/scenario.hpp"
#include "teamnav/serialize.hpp"
#include "teamnav/sim.hpp"

using namespace teamnav;

namespace {

Scenario open_field(Mode mode = Mode::kBaseline) {
  Scenario s = load_scenario("goal: [3, 0, 1]\nagents: [[0, 0.75, 1], [0, -0.75, 1], [-1.3, 0, 1]]\n");
  s.mode = mode;
  return s;
}

}  // namespace

TEST_CASE("goal at the barycenter terminates immediately") {
  Scenario s = load_scenario("goal: [0, 0, 1]\nagents: [[0.5, 0, 1], [-0.5, 0, 1]]\n");
  World w(s);
  CHECK(w.finished());
  const MetricsReport m = w.run();
  CHECK(m.time_to_goal == 0.0);
  CHECK(m.avg_distance_traveled == 0.0);
  CHECK(m.mean_velocity == 0.0);
  CHECK_FALSE(m.timeout);
}

TEST_CASE("single agent in empty space flies straight to the goal") {
  World w(load_scenario("goal: [3, 0, 1]\nagents: [[0, 0, 1]]\nmode: baseline\n"));
  const MetricsReport m = w.run();
  REQUIRE(w.goal_reached());
  double prev = -1e9;
  for (const auto& r : w.trace()) {
    CHECK(r.p_bar.x() >= prev - 1e-9);
    prev = r.p_bar.x();
  }
  const double straight = (w.trace().back().p_bar - w.trace().front().p_bar).norm();
  CHECK(std::abs(m.avg_distance_traveled - straight) <= 0.1 * straight);
}

TEST_CASE("team in empty space reaches the goal") {
  World w(open_field());
  const MetricsReport m = w.run();
  CHECK(w.goal_reached());
  CHECK_FALSE(m.timeout);
  CHECK(m.min_obstacle_distance == std::numeric_limits<double>::infinity());
}

TEST_CASE("replans every two seconds") {
  Scenario s = open_field();
  s.goal = Vec3(40, 0, 1);
  s.duration_max = 10.0;
  World w(s);
  w.run();
  REQUIRE(w.plan_times().size() == 6);
  for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(w.plan_times()[i] - 2.0 * i) < 1e-9);
  CHECK(w.timed_out());
}

TEST_CASE("runs are deterministic") {
  auto once = [] {
    Scenario s = load_scenario_file(TEAMNAV_SCENARIO_DIR "/gap_shared.yaml");
    s.duration_max = 12.0;
    s.sim.operator_jitter = 0.05;
    World w(s);
    const MetricsReport m = w.run();
    std::ostringstream trace;
    write_trace(trace, w);
    return std::make_pair(metrics_csv_row(m), trace.str());
  };
  const auto a = once();
  const auto b = once();
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
}

TEST_CASE("saturation and tunneling invariants hold on every tick") {
  Scenario s = load_scenario_file(TEAMNAV_SCENARIO_DIR "/gap_baseline.yaml");
  s.duration_max = 20.0;
  World w(s);
  w.run();
  const auto tr = w.trace();
  for (std::size_t k = 0; k < tr.size(); ++k) {
    for (std::size_t i = 0; i < tr[k].agents.size(); ++i) {
      CHECK(tr[k].v_cmd[i].norm() <= s.flocking.v_max + 1e-9);
      CHECK(tr[k].a_ref[i].norm() <= s.flocking.a_max + 1e-9);
      CHECK(tr[k].agents[i].velocity.norm() <= s.flocking.v_max + 1e-9);
      if (k > 0)
        CHECK((tr[k].agents[i].position - tr[k - 1].agents[i].position).norm() <=
              s.flocking.v_max * s.sim.dt + 1e-9);
    }
  }
}

TEST_CASE("kinetic energy stays bounded with a static marker") {
  Scenario s = open_field(Mode::kShared);
  s.goal = Vec3(100, 0, 1);
  s.operator_script = {{0.0, Vec3(1, 0.5, 1)}};
  s.duration_max = 120.0;
  World w(s);
  double peak = 0.0, late = 0.0;
  while (!w.finished()) {
    const TickRecord& r = w.step();
    double ke = 0.0;
    for (const auto& a : r.agents) ke += 0.5 * a.velocity.squaredNorm();
    peak = std::max(peak, ke);
    if (r.time > 100.0) late = std::max(late, ke);
  }
  CHECK(peak <= 1.5 + 1e-9);
  CHECK(late <= peak);
}

TEST_CASE("team order does not matter") {
  TeamState a, b;
  for (int i : {0, 1, 2}) {
    AgentState s;
    s.id = i;
    s.position = Vec3(0.1 * i * i, 1.0 / (i + 1), std::sqrt(i + 2.0));
    s.velocity = Vec3(0.3, -0.1 * i, 0.2);
    a.agents.push_back(s);
  }
  b.agents = {a.agents[2], a.agents[0], a.agents[1]};
  a.refresh();
  b.refresh();
  CHECK(a.barycenter == b.barycenter);
  CHECK(a.barycenter_velocity == b.barycenter_velocity);
  for (int i = 0; i < 3; ++i) CHECK(b.agents[static_cast<std::size_t>(i)].id == i);
}

TEST_CASE("shared mode without operator equals baseline") {
  World base(open_field(Mode::kBaseline));
  World shared(open_field(Mode::kShared));
  CHECK(metrics_csv_row(base.run()) == metrics_csv_row(shared.run()));
}

TEST_CASE("non-finite state halts with a dump") {
  World w(open_field(Mode::kShared));
  w.apply(SetControl{true});
  w.apply(SetTarget{Vec3(std::nan(""), 0, 1), Vec3::Zero()});
  CHECK_THROWS_WITH_AS(w.step(), doctest::Contains("non-finite state at tick"), SimulationError);
}

TEST_CASE("live commands reach the operator input") {
  CommandQueue q;
  World w(open_field(Mode::kShared));
  w.attach_live_operator(&q);
  q.push(SetControl{true});
  q.push(SetTarget{Vec3(1, 2, 1), Vec3(0.1, 0, 0)});
  w.step();
  CHECK(w.operator_input().take_control);
  CHECK(w.operator_input().p_u == Vec3(1, 2, 1));
  CHECK(w.operator_input().source == OperatorSource::kLive);
  q.push(SetGoal{Vec3(9, 0, 1)});
  w.step();
  CHECK(w.goal() == Vec3(9, 0, 1));
}

TEST_CASE("metrics on hand-made traces") {
  VoxelMap empty;
  std::vector<TickRecord> tr;
  for (int k = 0; k <= 250; ++k) {
    TickRecord r;
    r.tick = k;
    r.time = k * 0.02;
    AgentState a;
    a.position = Vec3(k * 0.02, 0, 1);
    r.agents = {a};
    r.goal_reached = k == 250;
    tr.push_back(r);
  }
  const MetricsReport m = compute_metrics(tr, empty);
  CHECK(m.avg_distance_traveled == doctest::Approx(5.0));
  CHECK(m.time_to_goal == doctest::Approx(5.0));
  CHECK(m.mean_velocity == doctest::Approx(1.0));
  CHECK_FALSE(m.timeout);

  for (auto& r : tr) {
    r.agents[0].position = Vec3(0, 0, 1);
    r.goal_reached = false;
  }
  const MetricsReport still = compute_metrics(tr, empty);
  CHECK(still.avg_distance_traveled == 0.0);
  CHECK(still.mean_velocity == 0.0);
  CHECK(still.timeout);
  CHECK_THROWS(compute_metrics(std::span<const TickRecord>{}, empty));
}
