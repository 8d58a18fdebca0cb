#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "teamnav/serialize.hpp"

using namespace teamnav;

namespace {

World short_run() {
  Scenario s = load_scenario_file(TEAMNAV_SCENARIO_DIR "/gap_shared.yaml");
  s.duration_max = 3.0;
  World w(s);
  w.run();
  return w;
}

}  // namespace

TEST_CASE("trace round trip preserves every record") {
  const World w = short_run();
  std::stringstream ss;
  write_trace(ss, w);
  const Trace t = read_trace(ss);
  CHECK(t.header.agents == 3);
  CHECK(t.header.mode == "shared");
  CHECK(t.header.goal == Vec3(5.5, -0.1, 1.0));
  REQUIRE(t.records.size() == w.trace().size());
  std::size_t plans = 0, voxels = 0;
  for (std::size_t k = 0; k < t.records.size(); ++k) {
    const TickRecord& a = w.trace()[k];
    const TickRecord& b = t.records[k];
    CHECK(a.tick == b.tick);
    CHECK(a.time == b.time);
    CHECK(a.p_c == b.p_c);
    CHECK(a.f_usr == b.f_usr);
    for (std::size_t i = 0; i < a.agents.size(); ++i) {
      CHECK(a.agents[i].position == b.agents[i].position);
      CHECK(a.agents[i].velocity == b.agents[i].velocity);
    }
    CHECK(a.new_voxels == b.new_voxels);
    CHECK(a.plan.has_value() == b.plan.has_value());
    if (a.plan) {
      ++plans;
      CHECK(a.plan->path.primitives.size() == b.plan->path.primitives.size());
      CHECK(a.plan->path.total_cost == b.plan->path.total_cost);
    }
    voxels += b.new_voxels.size();
  }
  CHECK(plans == 2);
  CHECK(voxels == w.known_map().size());
  CHECK(compute_metrics(t.records, w.truth_map()).avg_distance_traveled ==
        w.metrics().avg_distance_traveled);
}

TEST_CASE("corrupt trace reports the line") {
  const World w = short_run();
  std::stringstream ss;
  write_trace(ss, w);
  std::vector<std::string> lines;
  for (std::string l; std::getline(ss, l);) lines.push_back(l);
  REQUIRE(lines.size() > 10);

  auto join = [](const std::vector<std::string>& ls) {
    std::string out;
    for (const auto& l : ls) out += l + "\n";
    return out;
  };

  SUBCASE("truncated JSON") {
    auto bad = lines;
    bad[7] = bad[7].substr(0, bad[7].size() / 2);
    std::istringstream in(join(bad));
    try {
      read_trace(in);
      FAIL("expected TraceError");
    } catch (const TraceError& e) {
      CHECK(e.line() == 8);
    }
  }
  SUBCASE("missing header") {
    std::istringstream in(join({lines.begin() + 1, lines.end()}));
    CHECK_THROWS_AS(read_trace(in), TraceError);
  }
  SUBCASE("ticks out of order") {
    auto bad = lines;
    std::swap(bad[3], bad[4]);
    std::istringstream in(join(bad));
    try {
      read_trace(in);
      FAIL("expected TraceError");
    } catch (const TraceError& e) {
      CHECK(e.line() == 5);
    }
  }
  SUBCASE("empty input") {
    std::istringstream in("");
    CHECK_THROWS_AS(read_trace(in), TraceError);
  }
}

TEST_CASE("metrics csv header is written once") {
  const auto path = std::filesystem::temp_directory_path() / "teamnav_metrics_unit.csv";
  std::filesystem::remove(path);
  MetricsReport m;
  m.min_obstacle_distance = std::numeric_limits<double>::infinity();
  append_metrics_csv(path, m);
  append_metrics_csv(path, m);
  std::ifstream in(path);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == metrics_csv_header());
  CHECK(lines[1] == lines[2]);
  CHECK(lines[1].find("inf") != std::string::npos);
  std::filesystem::remove(path);
}

TEST_CASE("sampled path includes both ends") {
  PlannedPath p;
  p.primitives.push_back({Vec3::Zero(), Vec3(1, 0, 0), Vec3::Zero(), 1.3});
  p.retime();
  const auto s = sample_path(p, 0.1);
  CHECK(s.size() == 14);
  CHECK(s.front() == Vec3::Zero());
  CHECK(s.back().isApprox(Vec3(1.3, 0, 0)));
  CHECK(sample_path(PlannedPath{}, 0.1).empty());
}
