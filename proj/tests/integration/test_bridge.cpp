#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <boost/beast/http.hpp>

#include "teamnav/bridge_server.hpp"
#include "teamnav/scenario.hpp"
#include "teamnav/sim.hpp"
#include "ws_client.hpp"

using namespace teamnav;
using namespace std::chrono_literals;
using testing::WsClient;
namespace http = boost::beast::http;

namespace {

Scenario gap() { return load_scenario_file(TEAMNAV_SCENARIO_DIR "/gap_shared.yaml"); }

struct Rig {
  Scenario sc;
  World world{sc};
  CommandQueue queue;
  bridge::SessionHub hub{sc.sim.resolution, sc.sim.origin};
  bridge::BridgeServer server;

  explicit Rig(std::string static_dir = "", Scenario s = gap())
      : sc(std::move(s)), server(hub, queue, {"127.0.0.1", 0, std::move(static_dir)}) {
    world.attach_live_operator(&queue);
    server.start();
  }
  void steps(int n) {
    for (int k = 0; k < n; ++k) server.publish(bridge::make_snapshot(world.step(), sc.goal_tolerance));
  }
};

std::pair<int, std::string> http_get(unsigned short port, const std::string& target) {
  namespace net = boost::asio;
  net::io_context ioc;
  net::ip::tcp::socket sock(ioc);
  sock.connect({net::ip::make_address("127.0.0.1"), port});
  http::request<http::empty_body> req{http::verb::get, target, 11};
  req.set(http::field::host, "127.0.0.1");
  http::write(sock, req);
  boost::beast::flat_buffer buf;
  http::response<http::string_body> res;
  http::read(sock, buf, res);
  return {res.result_int(), res.body()};
}

}  // namespace

TEST_CASE("late joiner snapshot matches the known map") {
  Scenario s = gap();
  s.obstacles.push_back({Vec3(0.6, -3.0, 0.0), Vec3(1.4, 3.0, 2.0)});
  Rig rig("", s);
  rig.steps(50);
  WsClient c("127.0.0.1", rig.server.port());
  rig.server.flush();
  c.settle();
  std::set<VoxelKey> seen;
  bool first_reset = false;
  std::size_t odom = 0;
  for (const auto& m : c.inbox) {
    if (bridge::topic::is_robot_odom(m["topic"])) ++odom;
    if (m["topic"] != "static_occupancy") continue;
    if (seen.empty() && !first_reset) first_reset = m["data"]["reset"].get<bool>();
    CHECK(m["data"]["voxels"].size() <= bridge::kMaxVoxelsPerMessage);
    for (const auto& v : m["data"]["voxels"]) seen.insert({v[0].get<int>(), v[1].get<int>(), v[2].get<int>()});
  }
  CHECK(first_reset);
  CHECK(odom == 3);
  CHECK(seen == rig.world.known_map().occupied());
  CHECK(rig.world.known_map().size() > bridge::kMaxVoxelsPerMessage);
}

TEST_CASE("bad frames are answered on the wire") {
  Rig rig;
  WsClient c("127.0.0.1", rig.server.port());
  c.settle(50ms);
  c.send_text("not json");
  c.send({{"topic", "odometry"}, {"data", 1}});
  CHECK(c.wait_for([&] {
    int errors = 0;
    for (const auto& m : c.inbox) errors += m["topic"] == "error";
    return errors == 2;
  }, 2000ms));
  std::vector<std::string> codes;
  std::vector<std::int64_t> seqs;
  for (const auto& m : c.inbox)
    if (m["topic"] == "error") {
      codes.push_back(m["data"]["code"]);
      seqs.push_back(m["seq"]);
    }
  CHECK(codes == std::vector<std::string>{"malformed", "unknown_topic"});
  CHECK(seqs == std::vector<std::int64_t>{0, 1});
}

TEST_CASE("port conflicts are reported") {
  Rig rig;
  CommandQueue q;
  bridge::SessionHub hub(0.2, Vec3::Zero());
  bridge::BridgeServer second(hub, q, {"127.0.0.1", rig.server.port(), ""});
  CHECK_THROWS_AS(second.start(), bridge::BridgeError);
}

TEST_CASE("static files and unknown endpoints") {
  const auto dir = std::filesystem::temp_directory_path() / "teamnav_static_it";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "index.html") << "<html>console</html>";
  Rig rig(dir.string());
  const auto [code, body] = http_get(rig.server.port(), "/index.html");
  CHECK(code == 200);
  CHECK(body == "<html>console</html>");
  CHECK(http_get(rig.server.port(), "/").first == 200);
  CHECK(http_get(rig.server.port(), "/missing.js").first == 404);
  CHECK(http_get(rig.server.port(), "/../../etc/passwd").first == 404);
  std::filesystem::remove_all(dir);
}

TEST_CASE("stop closes clients and frees the port") {
  auto rig = std::make_unique<Rig>();
  WsClient c("127.0.0.1", rig->server.port());
  c.settle(50ms);
  const auto port = rig->server.port();
  rig->server.stop();
  CHECK_FALSE(rig->server.running());
  CHECK(c.wait_for([&] { return c.closed(); }, 1000ms));
  CommandQueue q;
  bridge::SessionHub hub(0.2, Vec3::Zero());
  bridge::BridgeServer again(hub, q, {"127.0.0.1", port, ""});
  CHECK_NOTHROW(again.start());
  again.stop();
}
