#include "mavtrack/server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>

#include "mavtrack/harness.hpp"

namespace mavtrack {

using proto::Message;
using proto::MsgType;
using nlohmann::json;

namespace {

class FdTransport : public LineTransport {
 public:
  explicit FdTransport(int fd) : fd_(fd) {}

  bool read_line(std::string& out) override {
    for (;;) {
      const auto pos = buffer_.find('\n');
      if (pos != std::string::npos) {
        out = buffer_.substr(0, pos);
        buffer_.erase(0, pos + 1);
        return true;
      }
      char chunk[4096];
      const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
      if (n <= 0) return false;
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  bool write_line(const std::string& line) override {
    std::string framed = line;
    framed.push_back('\n');
    std::size_t sent = 0;
    while (sent < framed.size()) {
      const ssize_t n = ::send(fd_, framed.data() + sent, framed.size() - sent, MSG_NOSIGNAL);
      if (n <= 0) return false;
      sent += static_cast<std::size_t>(n);
    }
    return true;
  }

 private:
  int fd_;
  std::string buffer_;
};

class StreamTransport : public LineTransport {
 public:
  StreamTransport(std::istream& in, std::ostream& out) : in_(in), out_(out) {}

  bool read_line(std::string& out) override { return static_cast<bool>(std::getline(in_, out)); }

  bool write_line(const std::string& line) override {
    out_ << line << "\n";
    out_.flush();
    return static_cast<bool>(out_);
  }

 private:
  std::istream& in_;
  std::ostream& out_;
};

struct Session {
  LineTransport& transport;
  const EpisodeConfig& cfg;
  std::string id;
  const EpisodeCallback& on_episode;

  Environment env;  // constructed with the session config below
  Policy policy;    // server-side controller for external-pose sessions
  bool have_policy = false;
  bool hello_done = false;
  bool running = false;
  bool external_mode = false;
  std::int64_t expected_step = 0;

  explicit Session(LineTransport& t, const EpisodeConfig& c, std::string sid, const EpisodeCallback& cb)
      : transport(t), cfg(c), id(std::move(sid)), on_episode(cb), env(c) {}

  void send(MsgType type, std::int64_t step, json data) {
    Message msg;
    msg.type = type;
    msg.session = id;
    msg.step = step;
    msg.data = std::move(data);
    transport.write_line(proto::encode(msg));
  }

  void send_error(const std::string& what) { send(MsgType::error, -1, json{{"message", what}}); }

  void send_observation() {
    json data = proto::observation_payload(env.observation());
    if (external_mode && have_policy) data["command"] = proto::command_json(policy(env.observation()));
    send(MsgType::observation, env.observation().step, std::move(data));
  }

  void finish_episode() {
    const auto& log = env.log();
    const auto table = aggregate(std::vector<std::vector<ScoreSampled>>{log.padded_scores()});
    send(MsgType::episode_end, -1,
         json{{"steps", log.records.size()},
              {"reason", to_string(log.reason)},
              {"aggregate",
               {{"p_rho", table.p_rho}, {"p_theta", table.p_theta}, {"p_phi", table.p_phi}, {"p_c", table.p_c}}}});
    if (on_episode) on_episode(log);
    running = false;
  }

  void send_step_result(const Environment::StepResult& res) {
    json data{{"reward",
               {{"r_x", res.reward.r_x},
                {"r_y", res.reward.r_y},
                {"r_z", res.reward.r_z},
                {"r_e", res.reward.r_e},
                {"r_v", res.reward.r_v},
                {"r_u", res.reward.r_u},
                {"collided", res.reward.collided},
                {"total", res.reward.total}}},
              {"score",
               {{"p_rho", res.score.p_rho},
                {"p_theta", res.score.p_theta},
                {"p_phi", res.score.p_phi},
                {"p_c", res.score.p_c}}},
              {"saturated", res.saturated},
              {"done", res.done}};
    if (res.done) data["reason"] = to_string(res.reason);
    send(MsgType::step_result, expected_step, std::move(data));
  }

  // returns false when the session must close
  bool handle(const Message& msg) {
    if (!hello_done) {
      if (msg.type != MsgType::hello) {
        send_error("expected hello");
        return false;
      }
      const std::string version = msg.data.value("version", "");
      const int major = std::atoi(version.c_str());
      if (major != proto::kProtocolMajor) {
        send_error("unsupported version '" + version + "' (server speaks " + proto::protocol_version() + ")");
        return false;
      }
      hello_done = true;
      send(MsgType::hello, -1,
           json{{"version", proto::protocol_version()},
                {"mode", to_string(cfg.observation.mode)},
                {"config_hash", config_hash(cfg)},
                {"dt", cfg.dt},
                {"episode_cap", cfg.max_duration},
                {"nominal_steps", cfg.nominal_steps()}});
      return true;
    }

    if (!running) {
      if (msg.type != MsgType::reset) {
        send_error("expected reset");
        return false;
      }
      if (!msg.data.contains("seed") || !msg.data.at("seed").is_number_unsigned()) {
        send_error("reset needs an unsigned 'seed'");
        return false;
      }
      external_mode = msg.data.value("pose_source", false);
      // the configured controller only serves external-pose sessions;
      // lock-step policy sessions always drive their own actions
      have_policy = external_mode && cfg.controller.type != ControllerType::external;
      if (have_policy) policy = make_policy(cfg);
      env.reset(msg.data.at("seed").get<std::uint64_t>());
      running = true;
      expected_step = 0;
      send_observation();
      return true;
    }

    const MsgType want = external_mode ? MsgType::external_pose : MsgType::action;
    if (msg.type != want) {
      send_error(std::string("expected ") + to_string(want));
      return false;
    }
    if (msg.step != expected_step) {
      send_error("out-of-order step " + std::to_string(msg.step) + ", expected " +
                 std::to_string(expected_step));
      return false;
    }

    Environment::StepResult res;
    try {
      if (external_mode) {
        const auto pose = proto::pose_from_json(msg.data);
        std::optional<Commandd> applied;
        if (msg.data.contains("action")) applied = proto::command_from_json(msg.data.at("action"));
        res = env.step_external(pose, applied);
      } else {
        res = env.step(proto::command_from_json(msg.data));
      }
    } catch (const std::exception& e) {
      send_error(e.what());
      return false;
    }
    send_step_result(res);
    ++expected_step;
    if (res.done) {
      finish_episode();
    } else {
      send_observation();
    }
    return true;
  }
};

}  // namespace

void run_session(LineTransport& transport, const EpisodeConfig& cfg, const std::string& session_id,
                 const EpisodeCallback& on_episode) {
  Session session(transport, cfg, session_id, on_episode);
  std::string line;
  while (transport.read_line(line)) {
    Message msg;
    try {
      msg = proto::decode(line);
    } catch (const proto::ProtocolError& e) {
      session.send_error(e.what());
      return;  // fail fast: one malformed line ends the session
    }
    if (!session.handle(msg)) return;
  }
}

void serve_stdio(const EpisodeConfig& cfg, std::istream& in, std::ostream& out,
                 const EpisodeCallback& on_episode) {
  StreamTransport transport(in, out);
  run_session(transport, cfg, "stdio", on_episode);
}

BridgeServer::BridgeServer(EpisodeConfig cfg, std::string host, int port)
    : cfg_(std::move(cfg)), host_(std::move(host)), port_(port) {}

BridgeServer::~BridgeServer() { stop(); }

int BridgeServer::start() {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw std::runtime_error("socket() failed");
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port_));
  if (::inet_pton(AF_INET, host_.c_str(), &addr.sin_addr) != 1)
    throw std::runtime_error("invalid listen address: " + host_);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
    throw std::runtime_error(std::string("bind() failed: ") + std::strerror(errno));
  if (::listen(listen_fd_, 16) != 0) throw std::runtime_error("listen() failed");
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  running_ = true;
  accept_thread_ = std::thread([this] { accept_loop(); });
  return port_;
}

void BridgeServer::accept_loop() {
  while (running_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (!running_) return;
      continue;
    }
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    const int n = ++sessions_started_;
    std::lock_guard lock(mutex_);
    session_fds_.push_back(fd);
    sessions_.emplace_back([this, fd, n] {
      FdTransport transport(fd);
      run_session(transport, cfg_, "s-" + std::to_string(n), [this](const EpisodeLog& log) {
        std::lock_guard lk(mutex_);
        last_log_ = log;
        if (on_episode_) on_episode_(log);
      });
      ::close(fd);
    });
  }
}

void BridgeServer::stop() {
  if (!running_.exchange(false)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  if (accept_thread_.joinable()) accept_thread_.join();
  std::vector<std::thread> sessions;
  {
    std::lock_guard lock(mutex_);
    for (const int fd : session_fds_) ::shutdown(fd, SHUT_RDWR);
    sessions.swap(sessions_);
  }
  for (auto& t : sessions)
    if (t.joinable()) t.join();
}

EpisodeLog BridgeServer::last_log() const {
  std::lock_guard lock(mutex_);
  return last_log_;
}

void BridgeServer::set_episode_callback(EpisodeCallback cb) {
  std::lock_guard lock(mutex_);
  on_episode_ = std::move(cb);
}

BridgeClient BridgeClient::connect(const std::string& host, int port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw std::runtime_error("socket() failed");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    throw std::runtime_error("invalid address: " + host);
  }
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    ::close(fd);
    throw std::runtime_error(std::string("connect() failed: ") + std::strerror(errno));
  }
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return BridgeClient(fd);
}

BridgeClient::BridgeClient(BridgeClient&& other) noexcept : fd_(other.fd_), buffer_(std::move(other.buffer_)) {
  other.fd_ = -1;
}

BridgeClient& BridgeClient::operator=(BridgeClient&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.fd_;
    buffer_ = std::move(other.buffer_);
    other.fd_ = -1;
  }
  return *this;
}

BridgeClient::~BridgeClient() { close(); }

void BridgeClient::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

void BridgeClient::send(const proto::Message& msg) { send_raw(proto::encode(msg)); }

void BridgeClient::send_raw(const std::string& line) {
  std::string framed = line;
  framed.push_back('\n');
  std::size_t sent = 0;
  while (sent < framed.size()) {
    const ssize_t n = ::send(fd_, framed.data() + sent, framed.size() - sent, MSG_NOSIGNAL);
    if (n <= 0) throw std::runtime_error("send failed");
    sent += static_cast<std::size_t>(n);
  }
}

bool BridgeClient::read_line(std::string& out) {
  for (;;) {
    const auto pos = buffer_.find('\n');
    if (pos != std::string::npos) {
      out = buffer_.substr(0, pos);
      buffer_.erase(0, pos + 1);
      return true;
    }
    char chunk[4096];
    const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
    if (n <= 0) return false;
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

proto::Message BridgeClient::read() {
  std::string line;
  if (!read_line(line)) throw std::runtime_error("connection closed");
  return proto::decode(line);
}

}  // namespace mavtrack
