#include "mavtrack/protocol.hpp"

namespace mavtrack::proto {

using nlohmann::json;

std::string to_string(MsgType t) {
  switch (t) {
    case MsgType::hello: return "hello";
    case MsgType::reset: return "reset";
    case MsgType::observation: return "observation";
    case MsgType::action: return "action";
    case MsgType::step_result: return "step_result";
    case MsgType::episode_end: return "episode_end";
    case MsgType::external_pose: return "external_pose";
    default: return "error";
  }
}

namespace {

bool type_from_string(const std::string& s, MsgType& out) {
  if (s == "hello") out = MsgType::hello;
  else if (s == "reset") out = MsgType::reset;
  else if (s == "observation") out = MsgType::observation;
  else if (s == "action") out = MsgType::action;
  else if (s == "step_result") out = MsgType::step_result;
  else if (s == "episode_end") out = MsgType::episode_end;
  else if (s == "external_pose") out = MsgType::external_pose;
  else if (s == "error") out = MsgType::error;
  else return false;
  return true;
}

constexpr char kB64[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

json vec3_json(const Vec3d& v) { return json::array({v.x(), v.y(), v.z()}); }
Vec3d vec3_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ProtocolError(0, "expected a 3-vector");
  return Vec3d(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>());
}

}  // namespace

std::string encode(const Message& msg) {
  json j;
  j["type"] = to_string(msg.type);
  if (!msg.session.empty()) j["session"] = msg.session;
  if (msg.step >= 0) j["step"] = msg.step;
  if (!msg.data.is_null() && !(msg.data.is_object() && msg.data.empty())) j["data"] = msg.data;
  return j.dump();
}

Message decode(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ProtocolError(e.byte, "malformed message");
  }
  if (!j.is_object()) throw ProtocolError(0, "message must be a JSON object");
  if (!j.contains("type") || !j.at("type").is_string()) throw ProtocolError(0, "missing message type");
  Message out;
  if (!type_from_string(j.at("type").get<std::string>(), out.type))
    throw ProtocolError(0, "unknown message type '" + j.at("type").get<std::string>() + "'");
  if (j.contains("session")) {
    if (!j.at("session").is_string()) throw ProtocolError(0, "session must be a string");
    out.session = j.at("session").get<std::string>();
  }
  if (j.contains("step")) {
    if (!j.at("step").is_number_integer() || j.at("step").get<std::int64_t>() < 0)
      throw ProtocolError(0, "step must be a non-negative integer");
    out.step = j.at("step").get<std::int64_t>();
  }
  if (j.contains("data")) {
    if (!j.at("data").is_object()) throw ProtocolError(0, "data must be an object");
    out.data = j.at("data");
  }
  for (const auto& [key, _] : j.items())
    if (key != "type" && key != "session" && key != "step" && key != "data")
      throw ProtocolError(0, "unknown field '" + key + "'");
  return out;
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out.push_back(kB64[(v >> 18) & 63]);
    out.push_back(kB64[(v >> 12) & 63]);
    out.push_back(kB64[(v >> 6) & 63]);
    out.push_back(kB64[v & 63]);
  }
  const std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    const std::uint32_t v = bytes[i] << 16;
    out.push_back(kB64[(v >> 18) & 63]);
    out.push_back(kB64[(v >> 12) & 63]);
    out += "==";
  } else if (rest == 2) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out.push_back(kB64[(v >> 18) & 63]);
    out.push_back(kB64[(v >> 12) & 63]);
    out.push_back(kB64[(v >> 6) & 63]);
    out.push_back('=');
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  static const auto value_of = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  if (text.size() % 4 != 0) throw ProtocolError(text.size(), "base64 length must be a multiple of 4");
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int vals[4];
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=' && k >= 2) {
        vals[k] = 0;
        ++pad;
      } else {
        vals[k] = value_of(c);
        if (vals[k] < 0 || pad > 0) throw ProtocolError(i + k, "invalid base64 character");
      }
    }
    const std::uint32_t v = (vals[0] << 18) | (vals[1] << 12) | (vals[2] << 6) | vals[3];
    out.push_back((v >> 16) & 255);
    if (pad < 2) out.push_back((v >> 8) & 255);
    if (pad < 1) out.push_back(v & 255);
  }
  return out;
}

json observation_payload(const Observation& obs) {
  json data;
  data["mode"] = to_string(obs.mode);
  data["t"] = obs.t;
  data["attitude"] = json::array({obs.attitude.w(), obs.attitude.x(), obs.attitude.y(), obs.attitude.z()});
  switch (obs.mode) {
    case ObservationMode::privileged:
      data["rel"] = {{"y", vec3_json(obs.rel.y)}, {"v", vec3_json(obs.rel.v)}, {"a", vec3_json(obs.rel.a)}};
      break;
    case ObservationMode::bboxes: {
      json boxes = json::array();
      for (const auto& b : obs.boxes) {
        if (b) boxes.push_back({{"cx", b->cx}, {"cy", b->cy}, {"r", b->r}, {"confidence", b->confidence}});
        else boxes.push_back(nullptr);
      }
      data["boxes"] = std::move(boxes);
      break;
    }
    case ObservationMode::frames: {
      json frames = json::array();
      for (const auto& f : obs.frames) frames.push_back(base64_encode(f.data));
      data["frames"] = std::move(frames);
      if (!obs.frames.empty()) {
        data["width"] = obs.frames.front().width;
        data["height"] = obs.frames.front().height;
      }
      break;
    }
  }
  return data;
}

Observation observation_from_payload(const json& data) {
  Observation obs;
  const std::string mode = data.at("mode").get<std::string>();
  obs.t = data.at("t").get<double>();
  const auto& q = data.at("attitude");
  obs.attitude = Quatd(q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>(), q.at(3).get<double>());
  if (mode == "privileged") {
    obs.mode = ObservationMode::privileged;
    const auto& rel = data.at("rel");
    obs.rel.y = vec3_from(rel.at("y"));
    obs.rel.v = vec3_from(rel.at("v"));
    obs.rel.a = vec3_from(rel.at("a"));
  } else if (mode == "bboxes") {
    obs.mode = ObservationMode::bboxes;
    for (const auto& b : data.at("boxes")) {
      if (b.is_null()) obs.boxes.push_back(std::nullopt);
      else
        obs.boxes.push_back(BBoxd{b.at("cx").get<double>(), b.at("cy").get<double>(), b.at("r").get<double>(),
                                  b.at("confidence").get<double>()});
    }
  } else if (mode == "frames") {
    obs.mode = ObservationMode::frames;
    const int width = data.value("width", 0);
    const int height = data.value("height", 0);
    for (const auto& f : data.at("frames")) {
      Frame frame;
      frame.width = width;
      frame.height = height;
      frame.data = base64_decode(f.get<std::string>());
      obs.frames.push_back(std::move(frame));
    }
  } else {
    throw ProtocolError(0, "unknown observation mode '" + mode + "'");
  }
  return obs;
}

json command_json(const Commandd& cmd) {
  return json{{"thrust", cmd.thrust}, {"rates", vec3_json(cmd.rates)}};
}

Commandd command_from_json(const json& j) {
  if (!j.is_object() || !j.contains("thrust") || !j.contains("rates"))
    throw ProtocolError(0, "action needs 'thrust' and 'rates'");
  Commandd cmd;
  cmd.thrust = j.at("thrust").get<double>();
  cmd.rates = vec3_from(j.at("rates"));
  if (!is_finite(cmd)) throw ProtocolError(0, "action must be finite");
  return cmd;
}

json pose_json(const Environment::ExternalPose& pose) {
  json j{{"p", vec3_json(pose.p)},
         {"v", vec3_json(pose.v)},
         {"q", json::array({pose.q.w(), pose.q.x(), pose.q.y(), pose.q.z()})},
         {"omega", vec3_json(pose.omega)}};
  if (pose.f) j["f"] = *pose.f;
  return j;
}

Environment::ExternalPose pose_from_json(const json& j) {
  if (!j.is_object() || !j.contains("p") || !j.contains("q"))
    throw ProtocolError(0, "external pose needs at least 'p' and 'q'");
  Environment::ExternalPose pose;
  pose.p = vec3_from(j.at("p"));
  if (j.contains("v")) pose.v = vec3_from(j.at("v"));
  const auto& q = j.at("q");
  if (!q.is_array() || q.size() != 4) throw ProtocolError(0, "pose q must be [w,x,y,z]");
  pose.q = Quatd(q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>(), q.at(3).get<double>());
  if (j.contains("omega")) pose.omega = vec3_from(j.at("omega"));
  if (j.contains("f")) pose.f = j.at("f").get<double>();
  return pose;
}

}  // namespace mavtrack::proto
