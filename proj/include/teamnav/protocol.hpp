#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "teamnav/operator.hpp"
#include "teamnav/planner.hpp"
#include "teamnav/sim.hpp"
#include "teamnav/voxel_map.hpp"

namespace teamnav::bridge {

using json = nlohmann::json;
using ClientId = std::uint64_t;

namespace topic {
inline constexpr const char* kStaticOccupancy = "static_occupancy";
inline constexpr const char* kFinalGoal = "final_goal";
inline constexpr const char* kMplPath = "mpl_path";
inline constexpr const char* kTakeControl = "take_control";
inline constexpr const char* kUserTarget = "user_target";
inline constexpr const char* kError = "error";
std::string robot_odom(int id);
bool is_robot_odom(const std::string& name);
}  // namespace topic

/// Wire envelope: {"topic", "seq", "stamp_ms", "data"}.
struct TopicMessage {
  std::string topic;
  std::int64_t seq = 0;
  std::int64_t stamp_ms = 0;
  json data;

  std::string encode() const;
  /// Parses an inbound frame. `seq` and `stamp_ms` are optional inbound.
  static TopicMessage decode(const std::string& text);
};

constexpr std::size_t kMaxVoxelsPerMessage = 500;
constexpr std::size_t kClientQueueLimit = 1024;
constexpr std::int64_t kOdometryPeriodMs = 50;  // 20 Hz

struct OdometrySample {
  int id = 0;
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Vec3 commanded_position = Vec3::Zero();
};

/// Immutable per-tick view handed from the sim to the bridge.
struct TickSnapshot {
  std::int64_t stamp_ms = 0;
  std::vector<OdometrySample> odometry;
  std::vector<VoxelKey> new_voxels;
  std::optional<PlannedPath> path;  // set on replan ticks
  Vec3 goal = Vec3::Zero();
  double goal_tolerance = 0.5;
  Vec3 migration_point = Vec3::Zero();
};

TickSnapshot make_snapshot(const TickRecord& rec, double goal_tolerance);

/// Outcome of one inbound frame.
struct InboundResult {
  std::vector<OperatorCommand> commands;  // to the sim
  std::vector<TopicMessage> replies;      // already queued for the sender
};

/// Transport-independent session state: clients, per-client outbound queues,
/// control ownership and the retained state used for late-joiner snapshots.
/// Thread-safe; the sim thread publishes while IO threads drain and submit.
class SessionHub {
 public:
  SessionHub(double resolution, const Vec3& origin);

  ClientId connect();
  /// Returns commands for the sim (control release if the owner left).
  std::vector<OperatorCommand> disconnect(ClientId id);

  void publish_tick(const TickSnapshot& snap);

  /// Inbound frame from `id`; `receipt_s` is the receipt time used for the
  /// server-side velocity estimate of user_target.
  InboundResult handle_inbound(ClientId id, const std::string& text, double receipt_s);

  /// Pops all queued messages for a client, assigning per-topic sequence
  /// numbers in send order.
  std::vector<std::string> drain(ClientId id);
  std::vector<TopicMessage> drain_messages(ClientId id);

  std::optional<ClientId> control_owner() const;
  std::size_t client_count() const;
  std::size_t queued(ClientId id) const;
  std::uint64_t resnapshots(ClientId id) const;
  const std::set<VoxelKey>& known_voxels() const { return known_; }

 private:
  struct Pending {
    std::string topic;
    std::int64_t stamp_ms;
    json data;
  };
  struct Client {
    std::deque<Pending> queue;
    std::map<std::string, std::int64_t> next_seq;
    std::uint64_t resnapshots = 0;
    std::optional<Vec3> last_target;
    double last_target_time = 0.0;
  };

  InboundResult interpret(Client& c, ClientId id, const std::string& text, double receipt_s);
  void enqueue(Client& c, Pending msg);
  void enqueue_snapshot(Client& c);
  std::vector<Pending> occupancy_batches(const std::vector<VoxelKey>& keys, bool reset,
                                         std::int64_t stamp) const;
  json odom_json(const OdometrySample& o) const;
  json path_json(const PlannedPath& p) const;
  json goal_json() const;

  mutable std::mutex mutex_;
  double resolution_;
  Vec3 origin_;
  ClientId next_id_ = 1;
  std::map<ClientId, Client> clients_;
  std::optional<ClientId> owner_;

  // Retained state for snapshots.
  std::int64_t stamp_ms_ = 0;
  std::map<int, OdometrySample> odometry_;
  std::set<VoxelKey> known_;
  std::optional<PlannedPath> path_;
  std::optional<Vec3> goal_;
  double goal_tolerance_ = 0.5;
  std::optional<std::int64_t> last_odom_slot_;
};

}  // namespace teamnav::bridge
