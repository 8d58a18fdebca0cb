#include "teamnav/protocol.hpp"

#include <cmath>
#include <stdexcept>

#include "teamnav/serialize.hpp"

namespace teamnav::bridge {

namespace topic {
std::string robot_odom(int id) { return "robot_odom_" + std::to_string(id); }
bool is_robot_odom(const std::string& name) { return name.rfind("robot_odom_", 0) == 0; }
}  // namespace topic

std::string TopicMessage::encode() const {
  return json{{"topic", topic}, {"seq", seq}, {"stamp_ms", stamp_ms}, {"data", data}}.dump();
}

TopicMessage TopicMessage::decode(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("message must be a JSON object");
  if (!j.contains("topic") || !j["topic"].is_string()) throw std::invalid_argument("missing topic");
  TopicMessage m;
  m.topic = j["topic"].get<std::string>();
  if (j.contains("seq") && j["seq"].is_number_integer()) m.seq = j["seq"].get<std::int64_t>();
  if (j.contains("stamp_ms") && j["stamp_ms"].is_number_integer()) m.stamp_ms = j["stamp_ms"].get<std::int64_t>();
  m.data = j.contains("data") ? j["data"] : json(nullptr);
  return m;
}

TickSnapshot make_snapshot(const TickRecord& rec, double goal_tolerance) {
  TickSnapshot s;
  s.stamp_ms = static_cast<std::int64_t>(std::llround(rec.time * 1000.0));
  for (const auto& a : rec.agents) s.odometry.push_back({a.id, a.position, a.velocity, a.commanded_position});
  s.new_voxels = rec.new_voxels;
  if (rec.plan) s.path = rec.plan->path;
  s.goal = rec.goal;
  s.goal_tolerance = goal_tolerance;
  s.migration_point = rec.p_c;
  return s;
}

SessionHub::SessionHub(double resolution, const Vec3& origin) : resolution_(resolution), origin_(origin) {}

json SessionHub::odom_json(const OdometrySample& o) const {
  return {{"id", o.id},
          {"position", to_json(o.position)},
          {"velocity", to_json(o.velocity)},
          {"commanded_position", to_json(o.commanded_position)}};
}

json SessionHub::path_json(const PlannedPath& p) const {
  json j = to_json(p);
  json samples = json::array();
  for (const auto& s : sample_path(p)) samples.push_back(to_json(s));
  j["samples"] = std::move(samples);
  return j;
}

json SessionHub::goal_json() const {
  return {{"position", to_json(*goal_)}, {"tolerance", goal_tolerance_}};
}

std::vector<SessionHub::Pending> SessionHub::occupancy_batches(const std::vector<VoxelKey>& keys,
                                                               bool reset, std::int64_t stamp) const {
  std::vector<Pending> out;
  std::size_t i = 0;
  do {
    json vox = json::array();
    const std::size_t end = std::min(keys.size(), i + kMaxVoxelsPerMessage);
    for (; i < end; ++i) vox.push_back({keys[i].x, keys[i].y, keys[i].z});
    json data = {{"resolution", resolution_},
                 {"origin", to_json(origin_)},
                 {"reset", reset && out.empty()},
                 {"voxels", std::move(vox)}};
    out.push_back({topic::kStaticOccupancy, stamp, std::move(data)});
  } while (i < keys.size());
  return out;
}

void SessionHub::enqueue_snapshot(Client& c) {
  for (const auto& [id, o] : odometry_) c.queue.push_back({topic::robot_odom(id), stamp_ms_, odom_json(o)});
  const std::vector<VoxelKey> all(known_.begin(), known_.end());
  for (auto& p : occupancy_batches(all, true, stamp_ms_)) c.queue.push_back(std::move(p));
  if (goal_) c.queue.push_back({topic::kFinalGoal, stamp_ms_, goal_json()});
  if (path_) c.queue.push_back({topic::kMplPath, stamp_ms_, path_json(*path_)});
}

void SessionHub::enqueue(Client& c, Pending msg) {
  if (c.queue.size() < kClientQueueLimit) {
    c.queue.push_back(std::move(msg));
    return;
  }
  // Overflow: occupancy deltas go first, then the oldest of everything else.
  // The snapshot that follows supersedes whatever was dropped, including msg.
  std::erase_if(c.queue, [](const Pending& p) { return p.topic == topic::kStaticOccupancy; });
  const std::size_t snapshot_size = odometry_.size() + known_.size() / kMaxVoxelsPerMessage + 3;
  while (!c.queue.empty() && c.queue.size() + snapshot_size > kClientQueueLimit) c.queue.pop_front();
  ++c.resnapshots;
  enqueue_snapshot(c);
}

ClientId SessionHub::connect() {
  std::lock_guard lock(mutex_);
  const ClientId id = next_id_++;
  enqueue_snapshot(clients_[id]);
  return id;
}

std::vector<OperatorCommand> SessionHub::disconnect(ClientId id) {
  std::lock_guard lock(mutex_);
  clients_.erase(id);
  if (owner_ && *owner_ == id) {
    owner_.reset();
    return {SetControl{false}};
  }
  return {};
}

void SessionHub::publish_tick(const TickSnapshot& snap) {
  std::lock_guard lock(mutex_);
  stamp_ms_ = snap.stamp_ms;

  std::vector<Pending> out;
  for (const auto& o : snap.odometry) odometry_[o.id] = o;
  const std::int64_t slot = snap.stamp_ms / kOdometryPeriodMs;
  if (!last_odom_slot_ || *last_odom_slot_ != slot) {
    last_odom_slot_ = slot;
    for (const auto& o : snap.odometry) out.push_back({topic::robot_odom(o.id), snap.stamp_ms, odom_json(o)});
  }

  std::vector<VoxelKey> fresh;
  for (const auto& k : snap.new_voxels)
    if (known_.insert(k).second) fresh.push_back(k);
  if (!fresh.empty())
    for (auto& p : occupancy_batches(fresh, false, snap.stamp_ms)) out.push_back(std::move(p));

  if (snap.path) {
    path_ = *snap.path;
    out.push_back({topic::kMplPath, snap.stamp_ms, path_json(*path_)});
  }

  if (!goal_ || *goal_ != snap.goal || goal_tolerance_ != snap.goal_tolerance) {
    goal_ = snap.goal;
    goal_tolerance_ = snap.goal_tolerance;
    out.push_back({topic::kFinalGoal, snap.stamp_ms, goal_json()});
  }

  for (auto& [id, client] : clients_) {
    const std::uint64_t before = client.resnapshots;
    for (const auto& msg : out) {
      enqueue(client, msg);
      if (client.resnapshots != before) break;  // snapshot already covers the rest
    }
  }
}

namespace {

TopicMessage error_reply(const std::string& code, const std::string& message, std::int64_t stamp) {
  return {topic::kError, 0, stamp, json{{"code", code}, {"message", message}}};
}

Vec3 position_field(const json& data) {
  if (!data.is_object() || !data.contains("position")) throw std::invalid_argument("missing position");
  return vec3_from_json(data.at("position"));
}

}  // namespace

InboundResult SessionHub::handle_inbound(ClientId id, const std::string& text, double receipt_s) {
  std::lock_guard lock(mutex_);
  auto it = clients_.find(id);
  if (it == clients_.end()) return {};
  InboundResult result = interpret(it->second, id, text, receipt_s);
  for (const auto& r : result.replies) enqueue(it->second, {r.topic, r.stamp_ms, r.data});
  return result;
}

InboundResult SessionHub::interpret(Client& client, ClientId id, const std::string& text, double receipt_s) {
  InboundResult result;

  TopicMessage msg;
  try {
    msg = TopicMessage::decode(text);
  } catch (const std::exception& e) {
    result.replies.push_back(error_reply("malformed", e.what(), stamp_ms_));
    return result;
  }

  try {
    if (msg.topic == topic::kTakeControl) {
      bool enable = false;
      if (msg.data.is_boolean()) enable = msg.data.get<bool>();
      else if (msg.data.is_object() && msg.data.contains("enable") && msg.data["enable"].is_boolean())
        enable = msg.data["enable"].get<bool>();
      else throw std::invalid_argument("take_control expects {\"enable\": bool}");

      if (enable) {
        if (owner_ && *owner_ != id) {
          result.replies.push_back(error_reply("control_owned", "control is held by another client", stamp_ms_));
          return result;
        }
        owner_ = id;
        client.last_target.reset();
        result.commands.push_back(SetControl{true});
        result.replies.push_back({topic::kTakeControl, 0, stamp_ms_, json{{"granted", true}, {"owner", id}}});
      } else {
        if (owner_ && *owner_ == id) {
          owner_.reset();
          result.commands.push_back(SetControl{false});
        }
        result.replies.push_back({topic::kTakeControl, 0, stamp_ms_, json{{"granted", false}, {"owner", nullptr}}});
      }
      return result;
    }

    if (msg.topic == topic::kUserTarget) {
      const Vec3 p = position_field(msg.data);
      if (msg.data.contains("orientation")) {
        const auto& q = msg.data["orientation"];
        if (!q.is_array() || q.size() != 4) throw std::invalid_argument("orientation must be [x, y, z, w]");
      }
      if (!owner_ || *owner_ != id) {
        result.replies.push_back(error_reply("not_owner", "user_target ignored without control", stamp_ms_));
        return result;
      }
      Vec3 v = Vec3::Zero();
      if (client.last_target && receipt_s > client.last_target_time)
        v = (p - *client.last_target) / (receipt_s - client.last_target_time);
      client.last_target = p;
      client.last_target_time = receipt_s;
      result.commands.push_back(SetTarget{p, v});
      return result;
    }

    if (msg.topic == topic::kFinalGoal) {
      const Vec3 p = position_field(msg.data);
      if (!owner_ || *owner_ != id) {
        result.replies.push_back(error_reply("not_owner", "goal edits require control", stamp_ms_));
        return result;
      }
      result.commands.push_back(SetGoal{p});
      return result;
    }
  } catch (const std::exception& e) {
    result.replies.push_back(error_reply("malformed", e.what(), stamp_ms_));
    return result;
  }

  result.replies.push_back(error_reply("unknown_topic", "topic '" + msg.topic + "' is not accepted inbound", stamp_ms_));
  return result;
}

std::vector<TopicMessage> SessionHub::drain_messages(ClientId id) {
  std::lock_guard lock(mutex_);
  std::vector<TopicMessage> out;
  auto it = clients_.find(id);
  if (it == clients_.end()) return out;
  Client& c = it->second;
  out.reserve(c.queue.size());
  for (auto& p : c.queue) out.push_back({p.topic, c.next_seq[p.topic]++, p.stamp_ms, std::move(p.data)});
  c.queue.clear();
  return out;
}

std::vector<std::string> SessionHub::drain(ClientId id) {
  std::vector<std::string> out;
  for (const auto& m : drain_messages(id)) out.push_back(m.encode());
  return out;
}

std::optional<ClientId> SessionHub::control_owner() const {
  std::lock_guard lock(mutex_);
  return owner_;
}

std::size_t SessionHub::client_count() const {
  std::lock_guard lock(mutex_);
  return clients_.size();
}

std::size_t SessionHub::queued(ClientId id) const {
  std::lock_guard lock(mutex_);
  auto it = clients_.find(id);
  return it == clients_.end() ? 0 : it->second.queue.size();
}

std::uint64_t SessionHub::resnapshots(ClientId id) const {
  std::lock_guard lock(mutex_);
  auto it = clients_.find(id);
  return it == clients_.end() ? 0 : it->second.resnapshots;
}

}  // namespace teamnav::bridge
