#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mavtrack/environment.hpp"

namespace mavtrack::proto {

inline constexpr int kProtocolMajor = 1;
inline constexpr int kProtocolMinor = 0;

inline std::string protocol_version() {
  return std::to_string(kProtocolMajor) + "." + std::to_string(kProtocolMinor);
}

enum class MsgType { hello, reset, observation, action, step_result, episode_end, external_pose, error };

std::string to_string(MsgType t);

/// One newline-delimited protocol message: a type tag, optional session id
/// and step index, and a typed payload object under "data".
struct Message {
  MsgType type = MsgType::error;
  std::string session;       // empty = absent
  std::int64_t step = -1;    // -1 = absent
  nlohmann::json data = nlohmann::json::object();

  bool operator==(const Message&) const = default;
};

class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(std::size_t byte_offset, const std::string& message)
      : std::runtime_error(message + " (byte " + std::to_string(byte_offset) + ")"), byte(byte_offset) {}
  std::size_t byte;
};

/// One line of UTF-8 without the trailing newline; doubles carry their
/// shortest round-trip decimal form, so decode(encode(m)) == m bit-exactly.
std::string encode(const Message& msg);
Message decode(const std::string& line);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

// payload builders / parsers shared by the server and C++ clients
nlohmann::json observation_payload(const Observation& obs);
Observation observation_from_payload(const nlohmann::json& data);

nlohmann::json command_json(const Commandd& cmd);
Commandd command_from_json(const nlohmann::json& j);

nlohmann::json pose_json(const Environment::ExternalPose& pose);
Environment::ExternalPose pose_from_json(const nlohmann::json& j);

}  // namespace mavtrack::proto
