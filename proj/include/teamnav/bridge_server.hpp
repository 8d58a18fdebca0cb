#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>

#include "teamnav/operator.hpp"
#include "teamnav/protocol.hpp"

namespace teamnav::bridge {

class BridgeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ServerOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = 9001;  // 0 picks a free port
  std::string static_dir;     // served over plain HTTP when non-empty
};

/// WebSocket endpoint at ws://host:port/stream backed by a SessionHub.
/// Runs its own IO thread. Inbound commands are pushed to `commands`.
class BridgeServer {
 public:
  BridgeServer(SessionHub& hub, CommandQueue& commands, ServerOptions options = {});
  ~BridgeServer();
  BridgeServer(const BridgeServer&) = delete;
  BridgeServer& operator=(const BridgeServer&) = delete;

  /// Binds and starts accepting. Throws BridgeError if the port is taken.
  void start();
  void stop();
  bool running() const;
  std::uint16_t port() const;

  /// Publishes a tick through the hub and wakes all writers.
  void publish(const TickSnapshot& snap);
  /// Wakes all writers so queued messages go out.
  void flush();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace teamnav::bridge
