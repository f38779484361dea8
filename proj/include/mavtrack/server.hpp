#pragma once

#include <atomic>
#include <functional>
#include <istream>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "mavtrack/protocol.hpp"

namespace mavtrack {

/// Newline-delimited message stream; one implementation per transport.
class LineTransport {
 public:
  virtual ~LineTransport() = default;
  virtual bool read_line(std::string& out) = 0;
  virtual bool write_line(const std::string& line) = 0;
};

using EpisodeCallback = std::function<void(const EpisodeLog&)>;

/// Drives one session over a transport: hello, then any number of
/// reset -> (observation -> action -> step_result)* -> episode_end rounds,
/// lock-step. A protocol violation sends an error message and ends the
/// session; environment faults never propagate out.
void run_session(LineTransport& transport, const EpisodeConfig& cfg, const std::string& session_id,
                 const EpisodeCallback& on_episode = {});

/// Single session over stdin/stdout-style streams.
void serve_stdio(const EpisodeConfig& cfg, std::istream& in, std::ostream& out,
                 const EpisodeCallback& on_episode = {});

/// TCP bridge: one concurrent session per connection, each with its own
/// environment.
class BridgeServer {
 public:
  explicit BridgeServer(EpisodeConfig cfg, std::string host = "127.0.0.1", int port = 0);
  ~BridgeServer();

  int start();  // binds and listens; returns the bound port
  void stop();

  int port() const { return port_; }
  int sessions_started() const { return sessions_started_.load(); }
  EpisodeLog last_log() const;
  void set_episode_callback(EpisodeCallback cb);

 private:
  void accept_loop();

  EpisodeConfig cfg_;
  std::string host_;
  int port_;
  int listen_fd_ = -1;
  std::atomic<bool> running_{false};
  std::atomic<int> sessions_started_{0};
  std::thread accept_thread_;
  mutable std::mutex mutex_;
  std::vector<std::thread> sessions_;
  std::vector<int> session_fds_;
  EpisodeLog last_log_;
  EpisodeCallback on_episode_;
};

/// Minimal blocking client for tests and C++ policies.
class BridgeClient {
 public:
  static BridgeClient connect(const std::string& host, int port);
  BridgeClient(BridgeClient&& other) noexcept;
  BridgeClient& operator=(BridgeClient&& other) noexcept;
  ~BridgeClient();

  void send(const proto::Message& msg);
  void send_raw(const std::string& line);
  proto::Message read();  // throws on closed connection
  bool read_line(std::string& out);
  void close();

 private:
  explicit BridgeClient(int fd) : fd_(fd) {}
  int fd_ = -1;
  std::string buffer_;
};

}  // namespace mavtrack
