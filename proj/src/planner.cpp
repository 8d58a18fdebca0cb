#include "teamnav/planner.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>
#include <unordered_map>

namespace teamnav {

// ---------------------------------------------------------------- PlannedPath

namespace {

/// Index of the primitive active at t, and t relative to its start.
std::pair<std::size_t, double> locate(const PlannedPath& path, double t) {
  if (path.empty()) throw std::invalid_argument("no reference available");
  double t0 = 0.0;
  for (std::size_t i = 0; i + 1 < path.primitives.size(); ++i) {
    const double d = path.primitives[i].duration;
    if (t < t0 + d) return {i, std::max(0.0, t - t0)};
    t0 += d;
  }
  const auto& last = path.primitives.back();
  return {path.primitives.size() - 1, std::clamp(t - t0, 0.0, last.duration)};
}

}  // namespace

Vec3 PlannedPath::position(double t) const {
  auto [i, s] = locate(*this, t);
  return primitives[i].position(s);
}

Vec3 PlannedPath::velocity(double t) const {
  auto [i, s] = locate(*this, t);
  return primitives[i].velocity(s);
}

Vec3 PlannedPath::acceleration(double t) const {
  auto [i, s] = locate(*this, t);
  (void)s;
  return primitives[i].control;
}

void PlannedPath::retime() {
  total_duration = 0.0;
  for (const auto& p : primitives) total_duration += p.duration;
}

void PlannerParams::validate() const {
  if (rho < 0 || rho_c < 0 || rho_usr < 0) throw std::invalid_argument("planner weights must be >= 0");
  if (!(tau > 0)) throw std::invalid_argument("planner.tau must be > 0");
  if (!(horizon > 0)) throw std::invalid_argument("planner.horizon must be > 0");
  if (!(primitive_dt > 0)) throw std::invalid_argument("planner.primitive_dt must be > 0");
  if (!(u_max >= 0)) throw std::invalid_argument("planner.u_max must be >= 0");
  if (!(v_max > 0)) throw std::invalid_argument("planner.v_max must be > 0");
  if (control_levels < 1) throw std::invalid_argument("planner.control_levels must be >= 1");
  if (depth_max < 1) throw std::invalid_argument("planner.depth_max must be >= 1");
  if (!(goal_tolerance >= 0)) throw std::invalid_argument("planner.goal_tolerance must be >= 0");
  if (!(clearance >= 0)) throw std::invalid_argument("planner.clearance must be >= 0");
  if (!(position_quantum > 0) || !(velocity_quantum > 0))
    throw std::invalid_argument("planner lattice quanta must be > 0");
  if (obstacle_samples < 1) throw std::invalid_argument("planner.obstacle_samples must be >= 1");
  if (user_samples < 2 || user_samples % 2 != 0)
    throw std::invalid_argument("planner.user_samples must be even and >= 2");
  if (max_expansions < 1) throw std::invalid_argument("planner.max_expansions must be >= 1");
}

// ------------------------------------------------------------------- costs

namespace {

std::vector<double> control_grid(const PlannerParams& params) {
  const int n = params.control_levels;
  if (n == 1) return {0.0};
  std::vector<double> values(static_cast<std::size_t>(n));
  const double step = 2.0 * params.u_max / (n - 1);
  for (int k = 0; k < n; ++k) values[static_cast<std::size_t>(k)] = -params.u_max + k * step;
  if (n % 2 == 1) values[static_cast<std::size_t>(n / 2)] = 0.0;
  return values;
}

}  // namespace

std::vector<MotionPrimitive> expand(const PlanStart& state, const PlannerParams& params) {
  const auto grid = control_grid(params);
  std::vector<MotionPrimitive> out;
  out.reserve(grid.size() * grid.size() * grid.size());
  const double v_limit = params.v_max * (1.0 + 1e-12);
  for (double ux : grid)
    for (double uy : grid)
      for (double uz : grid) {
        MotionPrimitive prim{state.position, state.velocity, Vec3(ux, uy, uz), params.primitive_dt};
        if (prim.end_velocity().norm() > v_limit) continue;
        out.push_back(prim);
      }
  return out;
}

double control_cost(const MotionPrimitive& prim) {
  return prim.control.squaredNorm() * prim.duration;
}

double obstacle_cost(const MotionPrimitive& prim, const VoxelMap& map,
                     const RepulsionParams& rep, int intervals) {
  if (map.empty()) return 0.0;
  const double h = prim.duration / intervals;
  double sum = 0.0;
  for (int k = 0; k <= intervals; ++k) {
    const double w = (k == 0 || k == intervals) ? 0.5 : 1.0;
    sum += w * repulsion_force(prim.position(k * h), map, rep).norm();
  }
  return sum * h;
}

double user_cost_segment(const MotionPrimitive& prim, double t0, const UserForce& force,
                         double tau, int intervals) {
  const double magnitude = force.vector.norm();
  if (magnitude < 1e-9) return 0.0;
  const Vec3 dir = force.vector / magnitude;
  const double h = prim.duration / intervals;
  auto integrand = [&](double s) {
    const Vec3 v = prim.velocity(s);
    const double speed = v.norm();
    const double misalign = speed < 1e-6 ? 1.0 : 1.0 - dir.dot(v / speed);
    return magnitude * misalign * std::exp(-(t0 + s) / tau);
  };
  double sum = integrand(0.0) + integrand(prim.duration);
  for (int k = 1; k < intervals; ++k) sum += (k % 2 == 1 ? 4.0 : 2.0) * integrand(k * h);
  return sum * h / 3.0;
}

double user_cost(const PlannedPath& path, const UserForce& force, double tau,
                 int intervals_per_primitive) {
  double total = 0.0;
  double t0 = 0.0;
  for (const auto& prim : path.primitives) {
    total += user_cost_segment(prim, t0, force, tau, intervals_per_primitive);
    t0 += prim.duration;
  }
  return total;
}

Vec3 project_goal(const Vec3& p_bar, const Vec3& goal, double horizon) {
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be > 0");
  const Vec3 delta = goal - p_bar;
  const double dist = delta.norm();
  if (dist <= horizon) return goal;
  return p_bar + horizon * (delta / dist);
}

bool primitive_free(const MotionPrimitive& prim, const VoxelMap& map, double clearance) {
  if (map.empty()) return true;
  const double speed_bound = std::max(prim.start_velocity.norm(), prim.end_velocity().norm());
  const double length_bound = speed_bound * prim.duration;
  const double step = map.resolution() / 2.0;
  const int n = std::max(1, static_cast<int>(std::ceil(length_bound / step)));

  std::vector<Vec3> pts(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) pts[static_cast<std::size_t>(i)] = prim.position(prim.duration * i / n);

  const Vec3 mid = prim.position(prim.duration / 2.0);
  double radius = 0.0;
  for (const auto& p : pts) radius = std::max(radius, (p - mid).norm());

  bool free = true;
  map.for_each_within(mid, radius + clearance + 1e-9, [&](const VoxelKey&, const Vec3& c) {
    if (!free) return;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      if (point_segment_distance(c, pts[i], pts[i + 1]) < clearance) {
        free = false;
        return;
      }
    }
  });
  return free;
}

bool primitive_inside(const MotionPrimitive& prim, const Vec3& lo, const Vec3& hi) {
  for (int a = 0; a < 3; ++a) {
    double p_min = std::min(prim.start_position[a], prim.end_position()[a]);
    double p_max = std::max(prim.start_position[a], prim.end_position()[a]);
    const double u = prim.control[a];
    if (u != 0.0) {
      const double t = -prim.start_velocity[a] / u;  // turning point
      if (t > 0.0 && t < prim.duration) {
        const double p = prim.position(t)[a];
        p_min = std::min(p_min, p);
        p_max = std::max(p_max, p);
      }
    }
    if (p_min < lo[a] || p_max > hi[a]) return false;
  }
  return true;
}

double primitive_cost(const MotionPrimitive& prim, double t0, const VoxelMap& map,
                      const UserForce& force, const PlannerParams& params,
                      const RepulsionParams& rep) {
  double cost = control_cost(prim) + params.rho * prim.duration;
  if (params.rho_c > 0.0) cost += params.rho_c * obstacle_cost(prim, map, rep, params.obstacle_samples);
  if (params.rho_usr > 0.0)
    cost += params.rho_usr * user_cost_segment(prim, t0, force, params.tau, params.user_samples);
  return cost;
}

double path_cost(const PlannedPath& path, const VoxelMap& map, const UserForce& force,
                 const PlannerParams& params, const RepulsionParams& rep) {
  double effort = 0.0, obstacle = 0.0, duration = 0.0;
  for (const auto& prim : path.primitives) {
    effort += control_cost(prim);
    obstacle += obstacle_cost(prim, map, rep, params.obstacle_samples);
    duration += prim.duration;
  }
  return effort + params.rho * duration + params.rho_c * obstacle +
         params.rho_usr * user_cost(path, force, params.tau, params.user_samples);
}

// ---------------------------------------------------------------------- A*

namespace {

using LatticeKey = std::array<std::int64_t, 7>;

struct KeyHash {
  std::size_t operator()(const LatticeKey& k) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    for (auto v : k) {
      h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

std::int64_t quantize(double value, double quantum) {
  return static_cast<std::int64_t>(std::llround(value / quantum));
}

LatticeKey lattice_key(int depth, const Vec3& p, const Vec3& v, double pq, double vq) {
  return {depth,          quantize(p.x(), pq), quantize(p.y(), pq), quantize(p.z(), pq),
          quantize(v.x(), vq), quantize(v.y(), vq), quantize(v.z(), vq)};
}

struct Node {
  MotionPrimitive prim;  // primitive that leads into this node (unused for root)
  Vec3 position;
  Vec3 velocity;
  int depth = 0;
  double g = 0.0;
  int parent = -1;
  LatticeKey key{};
};

struct OpenEntry {
  double f;
  double g;
  LatticeKey key;
  int node;
};

struct OpenOrder {
  bool operator()(const OpenEntry& a, const OpenEntry& b) const {
    if (a.f != b.f) return a.f > b.f;
    if (a.g != b.g) return a.g > b.g;
    return a.key > b.key;
  }
};

constexpr double kEdgeQuantum = 1e-7;

// Per-primitive collision and obstacle-cost results depend only on the start
// state and control, so they are shared across depths.
struct EdgeInfo {
  bool free;
  double obstacle;
};

PlannedPath reconstruct(const std::vector<Node>& nodes, int idx) {
  PlannedPath path;
  path.total_cost = nodes[static_cast<std::size_t>(idx)].g;
  for (int i = idx; nodes[static_cast<std::size_t>(i)].parent >= 0; i = nodes[static_cast<std::size_t>(i)].parent)
    path.primitives.push_back(nodes[static_cast<std::size_t>(i)].prim);
  std::reverse(path.primitives.begin(), path.primitives.end());
  path.retime();
  return path;
}

}  // namespace

PlannedPath plan(const PlanStart& start, const Vec3& virtual_goal, const VoxelMap& map,
                 const UserForce& force, const PlannerParams& params,
                 const RepulsionParams& rep, PlanStats* stats) {
  params.validate();
  PlanStats local;
  PlanStats& st = stats ? *stats : local;
  st = PlanStats{};

  PlanStart root_state = start;
  root_state.velocity = clamp_norm(start.velocity, params.v_max);

  // A start inside the clearance band would block every primitive; shrink the
  // clearance for this search to what the start actually has.
  double clearance = params.clearance;
  const double start_gap = nearest_occupied_distance(root_state.position, map);
  if (start_gap < clearance) clearance = 0.95 * start_gap;

  const double pq = params.position_quantum;
  const double vq = params.velocity_quantum;
  const auto heuristic = [&](const Vec3& p) {
    const double remaining = std::max(0.0, (p - virtual_goal).norm() - params.goal_tolerance);
    return params.rho * remaining / params.v_max;
  };

  std::vector<Node> nodes;
  nodes.reserve(4096);
  std::unordered_map<LatticeKey, double, KeyHash> best_g;
  std::unordered_map<LatticeKey, EdgeInfo, KeyHash> edge_cache;
  std::priority_queue<OpenEntry, std::vector<OpenEntry>, OpenOrder> open;

  Node root;
  root.position = root_state.position;
  root.velocity = root_state.velocity;
  root.key = lattice_key(0, root.position, root.velocity, pq, vq);
  nodes.push_back(root);
  best_g[root.key] = 0.0;
  open.push({heuristic(root.position), 0.0, root.key, 0});

  int closest = -1;
  double closest_dist = std::numeric_limits<double>::infinity();
  auto consider_closest = [&](int idx) {
    const Node& n = nodes[static_cast<std::size_t>(idx)];
    const double d = (n.position - virtual_goal).norm();
    if (closest < 0) {
      closest = idx;
      closest_dist = d;
      return;
    }
    const Node& c = nodes[static_cast<std::size_t>(closest)];
    if (d < closest_dist || (d == closest_dist && (n.g < c.g || (n.g == c.g && n.key < c.key)))) {
      closest = idx;
      closest_dist = d;
    }
  };

  while (!open.empty()) {
    const OpenEntry top = open.top();
    open.pop();
    const Node current = nodes[static_cast<std::size_t>(top.node)];
    if (top.g > best_g[current.key]) continue;  // stale entry

    if (current.depth >= 1 && (current.position - virtual_goal).norm() <= params.goal_tolerance) {
      return reconstruct(nodes, top.node);
    }
    if (current.depth >= params.depth_max) continue;
    if (st.expansions >= params.max_expansions) {
      st.budget_exhausted = true;
      break;
    }
    ++st.expansions;

    const double t0 = current.depth * params.primitive_dt;
    int control_index = 0;
    for (const auto& prim : expand({current.position, current.velocity}, params)) {
      const LatticeKey ck{control_index++,
                          quantize(prim.start_position.x(), kEdgeQuantum),
                          quantize(prim.start_position.y(), kEdgeQuantum),
                          quantize(prim.start_position.z(), kEdgeQuantum),
                          quantize(prim.start_velocity.x(), kEdgeQuantum),
                          quantize(prim.start_velocity.y(), kEdgeQuantum),
                          quantize(prim.start_velocity.z(), kEdgeQuantum)};
      auto it = edge_cache.find(ck);
      if (it == edge_cache.end()) {
        EdgeInfo info{primitive_inside(prim, params.workspace_min, params.workspace_max) &&
                           primitive_free(prim, map, clearance),
                       0.0};
        if (info.free && params.rho_c > 0.0)
          info.obstacle = obstacle_cost(prim, map, rep, params.obstacle_samples);
        it = edge_cache.emplace(ck, info).first;
      }
      if (!it->second.free) continue;

      double step_cost = control_cost(prim) + params.rho * prim.duration;
      if (params.rho_c > 0.0) step_cost += params.rho_c * it->second.obstacle;
      if (params.rho_usr > 0.0)
        step_cost += params.rho_usr * user_cost_segment(prim, t0, force, params.tau, params.user_samples);

      Node child;
      child.prim = prim;
      child.position = prim.end_position();
      child.velocity = prim.end_velocity();
      child.depth = current.depth + 1;
      child.g = current.g + step_cost;
      child.parent = top.node;
      child.key = lattice_key(child.depth, child.position, child.velocity, pq, vq);
      ++st.generated;

      auto [slot, inserted] = best_g.try_emplace(child.key, child.g);
      if (!inserted) {
        if (child.g >= slot->second) continue;
        slot->second = child.g;
      }
      nodes.push_back(child);
      const int idx = static_cast<int>(nodes.size()) - 1;
      consider_closest(idx);
      open.push({child.g + heuristic(child.position), child.g, child.key, idx});
    }
  }

  PlannedPath fallback;
  if (closest >= 0) {
    fallback = reconstruct(nodes, closest);
  } else {
    // Nothing collision-free to expand: hold position.
    fallback.primitives.push_back({root_state.position, Vec3::Zero(), Vec3::Zero(), params.primitive_dt});
    fallback.retime();
    fallback.total_cost = path_cost(fallback, map, force, params, rep);
  }
  fallback.partial = true;
  return fallback;
}

bool replan_due(const SimClock& clock, double period) {
  if (!(period > 0.0)) throw std::invalid_argument("replan period must be > 0");
  if (clock.tick <= 0) return true;
  constexpr double kSlack = 1e-9;
  const double now = clock.time() / period;
  const double prev = static_cast<double>(clock.tick - 1) * clock.dt / period;
  return std::floor(now + kSlack) > std::floor(prev + kSlack);
}

}  // namespace teamnav
