#include "teamnav/bridge_server.hpp"

#include <chrono>
#include <deque>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

namespace teamnav::bridge {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

double now_seconds() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

std::string mime_type(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html";
  if (ext == ".js" || ext == ".mjs") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  if (ext == ".wasm") return "application/wasm";
  return "application/octet-stream";
}

}  // namespace

struct BridgeServer::Impl {
  class Session;

  Impl(SessionHub& h, CommandQueue& c, ServerOptions o) : hub(h), commands(c), options(std::move(o)) {}

  SessionHub& hub;
  CommandQueue& commands;
  ServerOptions options;
  asio::io_context ioc;
  std::unique_ptr<tcp::acceptor> acceptor;
  std::thread io_thread;
  std::optional<asio::executor_work_guard<asio::io_context::executor_type>> work;
  std::map<ClientId, std::shared_ptr<Session>> sessions;  // IO thread only
  std::uint16_t bound_port = 0;
  bool started = false;

  void accept();
  void handle_http(tcp::socket socket);
  void wake_all() {
    for (auto& [id, s] : sessions) s->pump();
  }

  void forward(const std::vector<OperatorCommand>& cmds) {
    for (const auto& c : cmds) commands.push(c);
  }

  class Session : public std::enable_shared_from_this<Session> {
   public:
    Session(Impl& owner, websocket::stream<beast::tcp_stream> ws) : owner_(owner), ws_(std::move(ws)) {}

    void open(http::request<http::string_body> req) {
      ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
      ws_.text(true);
      ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
        if (ec) return;
        self->id_ = self->owner_.hub.connect();
        self->owner_.sessions[self->id_] = self;
        self->read();
        self->pump();
      });
    }

    // Flushes what is queued, then sends a close frame.
    void shutdown() {
      closing_ = true;
      if (id_ == 0) return close();
      pump();
    }

    void pump() {
      if (writing_ || closed_ || id_ == 0) return;
      if (outbox_.empty()) {
        for (auto& m : owner_.hub.drain(id_)) outbox_.push_back(std::move(m));
      }
      if (outbox_.empty()) {
        if (closing_ && !close_sent_) {
          close_sent_ = true;
          ws_.async_close(websocket::close_code::going_away,
                          [self = shared_from_this()](beast::error_code) { self->close(); });
        }
        return;
      }
      writing_ = true;
      ws_.async_write(asio::buffer(outbox_.front()),
                      [self = shared_from_this()](beast::error_code ec, std::size_t) {
                        self->writing_ = false;
                        if (ec) return self->close();
                        self->outbox_.pop_front();
                        self->pump();
                      });
    }

    void close() {
      if (closed_) return;
      closed_ = true;
      if (id_ != 0) {
        owner_.forward(owner_.hub.disconnect(id_));
        owner_.sessions.erase(id_);
      }
      beast::error_code ignored;
      beast::get_lowest_layer(ws_).socket().close(ignored);
    }

   private:
    void read() {
      ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
        if (ec) return self->close();
        const std::string text = beast::buffers_to_string(self->buffer_.data());
        self->buffer_.consume(self->buffer_.size());
        auto result = self->owner_.hub.handle_inbound(self->id_, text, now_seconds());
        self->owner_.forward(result.commands);
        self->pump();
        self->read();
      });
    }

    Impl& owner_;
    websocket::stream<beast::tcp_stream> ws_;
    bool closing_ = false;
    bool close_sent_ = false;
    beast::flat_buffer buffer_;
    std::deque<std::string> outbox_;
    ClientId id_ = 0;
    bool writing_ = false;
    bool closed_ = false;
  };
};

void BridgeServer::Impl::accept() {
  acceptor->async_accept([this](beast::error_code ec, tcp::socket socket) {
    if (ec) return;  // acceptor closed
    handle_http(std::move(socket));
    accept();
  });
}

void BridgeServer::Impl::handle_http(tcp::socket socket) {
  struct Conn {
    beast::tcp_stream stream;
    beast::flat_buffer buffer;
    http::request<http::string_body> req;
    http::response<http::string_body> res;
  };
  auto conn = std::make_shared<Conn>(Conn{beast::tcp_stream(std::move(socket)), {}, {}, {}});
  conn->stream.expires_after(std::chrono::seconds(30));
  http::async_read(conn->stream, conn->buffer, conn->req, [this, conn](beast::error_code ec, std::size_t) {
    if (ec) return;
    const std::string target(conn->req.target());
    if (websocket::is_upgrade(conn->req)) {
      if (target != "/stream") {
        conn->res = {http::status::not_found, conn->req.version()};
        conn->res.body() = "websocket endpoint is /stream\n";
      } else {
        conn->stream.expires_never();
        auto s = std::make_shared<Session>(*this, websocket::stream<beast::tcp_stream>(std::move(conn->stream)));
        s->open(std::move(conn->req));
        return;
      }
    } else if (!options.static_dir.empty() && conn->req.method() == http::verb::get) {
      namespace fs = std::filesystem;
      std::string rel = target.substr(0, target.find('?'));
      if (rel.empty() || rel == "/") rel = "/index.html";
      const fs::path root = fs::weakly_canonical(options.static_dir);
      const fs::path file = fs::weakly_canonical(root / rel.substr(1));
      const auto [mismatch, _] = std::mismatch(root.begin(), root.end(), file.begin(), file.end());
      std::ifstream in(file, std::ios::binary);
      if (mismatch == root.end() && in) {
        std::ostringstream body;
        body << in.rdbuf();
        conn->res = {http::status::ok, conn->req.version()};
        conn->res.set(http::field::content_type, mime_type(file));
        conn->res.body() = body.str();
      } else {
        conn->res = {http::status::not_found, conn->req.version()};
        conn->res.body() = "not found\n";
      }
    } else {
      conn->res = {http::status::not_found, conn->req.version()};
      conn->res.body() = "not found\n";
    }
    conn->res.keep_alive(false);
    conn->res.prepare_payload();
    http::async_write(conn->stream, conn->res, [conn](beast::error_code, std::size_t) {
      beast::error_code ignored;
      conn->stream.socket().shutdown(tcp::socket::shutdown_send, ignored);
    });
  });
}

BridgeServer::BridgeServer(SessionHub& hub, CommandQueue& commands, ServerOptions options)
    : impl_(std::make_unique<Impl>(hub, commands, std::move(options))) {}

BridgeServer::~BridgeServer() { stop(); }

void BridgeServer::start() {
  if (impl_->started) return;
  beast::error_code ec;
  const auto address = asio::ip::make_address(impl_->options.host, ec);
  if (ec) throw BridgeError("invalid host '" + impl_->options.host + "'");
  const tcp::endpoint endpoint(address, impl_->options.port);
  auto acceptor = std::make_unique<tcp::acceptor>(impl_->ioc);
  acceptor->open(endpoint.protocol(), ec);
  if (!ec) acceptor->set_option(asio::socket_base::reuse_address(true), ec);
  if (!ec) acceptor->bind(endpoint, ec);
  if (!ec) acceptor->listen(asio::socket_base::max_listen_connections, ec);
  if (ec)
    throw BridgeError("cannot listen on " + impl_->options.host + ":" + std::to_string(impl_->options.port) +
                      ": " + ec.message());
  impl_->bound_port = acceptor->local_endpoint().port();
  impl_->acceptor = std::move(acceptor);
  impl_->started = true;
  impl_->accept();
  impl_->work.emplace(impl_->ioc.get_executor());
  impl_->io_thread = std::thread([this] { impl_->ioc.run(); });
}

void BridgeServer::stop() {
  if (!impl_ || !impl_->started) return;
  Impl* impl = impl_.get();
  auto on_io = [impl](auto fn) {
    auto done = std::make_shared<std::promise<bool>>();
    auto result = done->get_future();
    asio::post(impl->ioc, [impl, fn, done] { done->set_value(fn(*impl)); });
    return result.wait_for(std::chrono::seconds(1)) == std::future_status::ready && result.get();
  };
  on_io([](Impl& i) {
    beast::error_code ignored;
    i.acceptor->close(ignored);
    auto sessions = i.sessions;
    for (auto& [id, s] : sessions) s->shutdown();
    return true;
  });
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(500);
  while (std::chrono::steady_clock::now() < deadline && !on_io([](Impl& i) { return i.sessions.empty(); }))
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  on_io([](Impl& i) {
    auto sessions = i.sessions;
    for (auto& [id, s] : sessions) s->close();
    return true;
  });
  impl_->work.reset();
  impl_->ioc.stop();
  if (impl_->io_thread.joinable()) impl_->io_thread.join();
  impl_->started = false;
}

bool BridgeServer::running() const { return impl_->started; }

std::uint16_t BridgeServer::port() const { return impl_->bound_port; }

void BridgeServer::publish(const TickSnapshot& snap) {
  impl_->hub.publish_tick(snap);
  flush();
}

void BridgeServer::flush() {
  if (!impl_->started) return;
  asio::post(impl_->ioc, [impl = impl_.get()] { impl->wake_all(); });
}

}  // namespace teamnav::bridge
