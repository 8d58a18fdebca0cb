// teamnav: run scenarios, compare modes, serve the bridge, replay traces.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "teamnav/bridge_server.hpp"
#include "teamnav/protocol.hpp"
#include "teamnav/scenario.hpp"
#include "teamnav/serialize.hpp"
#include "teamnav/sim.hpp"

using namespace teamnav;

namespace {

constexpr int kExitGoal = 0;
constexpr int kExitError = 1;
constexpr int kExitTimeout = 2;

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

std::uint16_t default_port() {
  if (const char* env = std::getenv("TEAMNAV_PORT")) {
    try {
      const int p = std::stoi(env);
      if (p >= 0 && p <= 65535) return static_cast<std::uint16_t>(p);
    } catch (const std::exception&) {
    }
    std::cerr << "warning: ignoring invalid TEAMNAV_PORT='" << env << "'\n";
  }
  return 9001;
}

struct RunConfig {
  std::string scenario;
  std::string mode;
  std::string script;
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
};

Scenario load_config(const RunConfig& cfg) {
  Scenario sc = load_scenario_file(cfg.scenario);
  if (!cfg.mode.empty()) sc.mode = parse_mode(cfg.mode);
  if (!cfg.script.empty()) sc.operator_script = load_operator_script_file(cfg.script);
  if (cfg.seed) sc.sim.seed = *cfg.seed;
  if (cfg.duration) sc.duration_max = *cfg.duration;
  sc.validate();
  return sc;
}

void add_run_options(CLI::App* app, RunConfig& cfg, const std::string& suffix = "") {
  app->add_option("--scenario" + suffix, cfg.scenario, "scenario YAML file")->required()->check(CLI::ExistingFile);
  app->add_option("--mode" + suffix, cfg.mode, "baseline or shared (overrides the file)")
      ->check(CLI::IsMember({"baseline", "shared"}));
  app->add_option("--script" + suffix, cfg.script, "operator script YAML (overrides the file)")
      ->check(CLI::ExistingFile);
}

void write_outputs(const World& world, const MetricsReport& m, const std::string& metrics_path,
                   const std::string& trace_path) {
  if (!metrics_path.empty()) append_metrics_csv(metrics_path, m);
  if (!trace_path.empty()) {
    std::ofstream out(trace_path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write trace '" + trace_path + "'");
    write_trace(out, world);
  }
}

void print_report(const MetricsReport& m) {
  std::printf("avg_distance_traveled    %.3f m\n", m.avg_distance_traveled);
  std::printf("time_to_goal             %.2f s%s\n", m.time_to_goal, m.timeout ? " (timeout)" : "");
  std::printf("mean_velocity            %.3f m/s\n", m.mean_velocity);
  std::printf("min_obstacle_distance    %.3f m\n", m.min_obstacle_distance);
  std::printf("min_inter_agent_distance %.3f m\n", m.min_inter_agent_distance);
  std::printf("avg_user_force           %.3f N\n", m.avg_user_force);
}

// Sleeps until `tick_index` ticks of `dt` have elapsed since `start` at `speed`.
void pace(std::chrono::steady_clock::time_point start, std::int64_t tick_index, double dt, double speed) {
  const auto target = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                  std::chrono::duration<double>(static_cast<double>(tick_index) * dt / speed));
  std::this_thread::sleep_until(target);
}

struct ServeOptions {
  bool serve = false;
  std::uint16_t port = 9001;
  std::string host = "127.0.0.1";
  std::string static_dir;
};

int cmd_run(const RunConfig& cfg, bool headless, const ServeOptions& so, const std::string& metrics,
            const std::string& trace, double speed) {
  World world(load_config(cfg));
  const Scenario& sc = world.scenario();

  if (!so.serve) {
    const MetricsReport m = world.run();
    write_outputs(world, m, metrics, trace);
    print_report(m);
    return m.timeout ? kExitTimeout : kExitGoal;
  }

  bridge::SessionHub hub(sc.sim.resolution, sc.sim.origin);
  CommandQueue commands;
  bridge::BridgeServer server(hub, commands, {so.host, so.port, so.static_dir});
  server.start();
  std::cerr << "serving ws://" << so.host << ":" << server.port() << "/stream\n";
  server.publish(bridge::make_snapshot(world.trace().back(), sc.goal_tolerance));

  if (!headless) {
    // Live console drives the marker; hold the clock until someone takes control.
    std::cerr << "waiting for take_control\n";
    world.attach_live_operator(&commands);
    bool control = false;
    while (!control && !g_interrupted) {
      for (const auto& c : commands.drain()) {
        world.apply(c);
        if (const auto* sc_cmd = std::get_if<SetControl>(&c); sc_cmd && sc_cmd->enabled) control = true;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
  }

  const auto start = std::chrono::steady_clock::now();
  std::int64_t n = 0;
  while (!world.finished() && !g_interrupted) {
    const TickRecord& rec = world.step();
    server.publish(bridge::make_snapshot(rec, sc.goal_tolerance));
    pace(start, ++n, sc.sim.dt, speed);
  }
  server.flush();
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();

  const MetricsReport m = world.metrics();
  write_outputs(world, m, metrics, trace);
  print_report(m);
  if (g_interrupted) {
    std::cerr << "interrupted\n";
    return kExitError;
  }
  return m.timeout ? kExitTimeout : kExitGoal;
}

int cmd_compare(const RunConfig& a, const RunConfig& b) {
  World wa(load_config(a));
  World wb(load_config(b));
  const MetricsReport ma = wa.run();
  const MetricsReport mb = wb.run();

  struct Row {
    const char* name;
    double a, b;
  };
  const Row rows[] = {
      {"Average distance traveled [m]", ma.avg_distance_traveled, mb.avg_distance_traveled},
      {"Time to reach the goal [s]", ma.time_to_goal, mb.time_to_goal},
      {"Mean velocity [m/s]", ma.mean_velocity, mb.mean_velocity},
      {"Min. distance to obstacles [m]", ma.min_obstacle_distance, mb.min_obstacle_distance},
      {"Min. distance inter-agent [m]", ma.min_inter_agent_distance, mb.min_inter_agent_distance},
      {"Average user force [N]", ma.avg_user_force, mb.avg_user_force},
  };
  std::printf("%-32s %12s %12s %12s\n", "Metric", to_string(wa.scenario().mode).data(),
              to_string(wb.scenario().mode).data(), "delta");
  for (const auto& r : rows) std::printf("%-32s %12.4f %12.4f %+12.4f\n", r.name, r.a, r.b, r.b - r.a);
  if (ma.timeout) std::printf("note: run A timed out\n");
  if (mb.timeout) std::printf("note: run B timed out\n");
  return (ma.timeout || mb.timeout) ? kExitTimeout : kExitGoal;
}

int cmd_replay(const std::string& path, const ServeOptions& so, double speed) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open trace '" + path + "'");
  const Trace trace = read_trace(in);

  bridge::SessionHub hub(trace.header.resolution, trace.header.origin);
  CommandQueue ignored;  // replay is read-only
  bridge::BridgeServer server(hub, ignored, {so.host, so.port, so.static_dir});
  server.start();
  std::cerr << "replaying " << trace.records.size() << " ticks on ws://" << so.host << ":" << server.port()
            << "/stream\n";

  const auto start = std::chrono::steady_clock::now();
  const double t0 = trace.records.empty() ? 0.0 : trace.records.front().time;
  for (const auto& rec : trace.records) {
    if (g_interrupted) break;
    const auto target = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                    std::chrono::duration<double>((rec.time - t0) / speed));
    std::this_thread::sleep_until(target);
    server.publish(bridge::make_snapshot(rec, trace.header.goal_tolerance));
  }
  server.flush();
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  return g_interrupted ? kExitError : kExitGoal;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shared-control multi-drone simulator"};
  app.require_subcommand(1);

  RunConfig run_cfg;
  bool headless = false;
  ServeOptions serve;
  serve.port = default_port();
  std::string metrics_path, trace_path;
  double speed = 1.0;
  std::uint64_t seed = 0;
  double duration = 0.0;

  auto* run = app.add_subcommand("run", "run one scenario");
  add_run_options(run, run_cfg);
  run->add_flag("--headless", headless, "no live console; the scripted operator drives the marker");
  run->add_flag("--serve", serve.serve, "serve the WebSocket bridge while running");
  run->add_option("--port", serve.port, "bridge port (env TEAMNAV_PORT, default 9001)");
  run->add_option("--host", serve.host, "bridge bind address");
  run->add_option("--static-dir", serve.static_dir, "directory served over HTTP next to the bridge");
  run->add_option("--metrics", metrics_path, "append one CSV row to this file");
  run->add_option("--trace", trace_path, "write a JSON-lines tick trace");
  auto* seed_opt = run->add_option("--seed", seed, "RNG seed for operator jitter (default 42)");
  auto* dur_opt = run->add_option("--duration", duration, "override duration_max [s]")->check(CLI::PositiveNumber);
  run->add_option("--speed", speed, "wall-clock speed multiple when serving")->check(CLI::PositiveNumber);

  RunConfig cmp_a, cmp_b;
  auto* compare = app.add_subcommand("compare", "run two configurations and tabulate metric deltas");
  add_run_options(compare, cmp_a, "-a");
  add_run_options(compare, cmp_b, "-b");
  auto* cmp_seed = compare->add_option("--seed", seed, "seed for both runs");
  auto* cmp_dur = compare->add_option("--duration", duration, "duration_max for both runs")
                      ->check(CLI::PositiveNumber);

  std::string replay_path;
  ServeOptions replay_serve;
  replay_serve.port = default_port();
  double replay_speed = 1.0;
  auto* replay = app.add_subcommand("replay", "re-publish a recorded trace over the bridge");
  replay->add_option("--trace", replay_path, "trace file")->required()->check(CLI::ExistingFile);
  replay->add_option("--port", replay_serve.port, "bridge port (env TEAMNAV_PORT, default 9001)");
  replay->add_option("--host", replay_serve.host, "bridge bind address");
  replay->add_option("--static-dir", replay_serve.static_dir, "directory served over HTTP");
  replay->add_option("--speed", replay_speed, "playback speed multiple")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);

  try {
    if (*run) {
      if (*seed_opt) run_cfg.seed = seed;
      if (*dur_opt) run_cfg.duration = duration;
      return cmd_run(run_cfg, headless, serve, metrics_path, trace_path, speed);
    }
    if (*compare) {
      for (RunConfig* c : {&cmp_a, &cmp_b}) {
        if (*cmp_seed) c->seed = seed;
        if (*cmp_dur) c->duration = duration;
      }
      return cmd_compare(cmp_a, cmp_b);
    }
    if (*replay) return cmd_replay(replay_path, replay_serve, replay_speed);
  } catch (const TraceError& e) {
    std::cerr << "error: corrupt trace at " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
