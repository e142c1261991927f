#include "retarget/messages.hpp"

#include "retarget/errors.hpp"

#include <cmath>

#include <json.hpp>

namespace retarget {

namespace {

using json = nlohmann::json;
using ordered = nlohmann::ordered_json;

constexpr double kUnitQuatTol = 1e-6;

[[noreturn]] void fail(CodecErrc code, const std::string& msg) { throw CodecError(code, msg); }

ordered vec_json(const Eigen::VectorXd& v) {
  ordered a = ordered::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

ordered vec3_json(const Vec3& v) { return ordered::array({v.x(), v.y(), v.z()}); }

ordered pose_json(const Pose& p) {
  const Quat& q = p.rotation;
  return ordered{{"q", ordered::array({q.w(), q.x(), q.y(), q.z()})}, {"p", vec3_json(p.translation)}};
}

const json& field(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(CodecErrc::invalid_field, std::string("missing field '") + key + "'");
  return *it;
}

double number(const json& v, const std::string& what) {
  if (!v.is_number()) fail(CodecErrc::invalid_field, what + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(CodecErrc::invalid_field, what + " must be finite");
  return x;
}

Eigen::VectorXd vector_of(const json& v, std::size_t n, const std::string& what) {
  if (!v.is_array() || v.size() != n) {
    fail(CodecErrc::invalid_field, what + " must be an array of " + std::to_string(n) + " numbers");
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) out[static_cast<Eigen::Index>(i)] = number(v[i], what);
  return out;
}

Vec3 vec3_of(const json& v, const std::string& what) { return vector_of(v, 3, what); }

Pose pose_of(const json& v, const std::string& what) {
  if (!v.is_object()) fail(CodecErrc::invalid_field, what + " must be an object");
  const Eigen::VectorXd q = vector_of(field(v, "q"), 4, what + ".q");
  Pose p;
  p.rotation = Quat(q[0], q[1], q[2], q[3]);
  p.translation = vec3_of(field(v, "p"), what + ".p");
  if (std::abs(p.rotation.norm() - 1.0) > kUnitQuatTol) fail(CodecErrc::invalid_field, what + ".q is not a unit quaternion");
  return p;
}

bool boolean(const json& v, const std::string& what) {
  if (!v.is_boolean()) fail(CodecErrc::invalid_field, what + " must be a boolean");
  return v.get<bool>();
}

std::string text(const json& v, const std::string& what) {
  if (!v.is_string()) fail(CodecErrc::invalid_field, what + " must be a string");
  return v.get<std::string>();
}

std::string line_of(const ordered& j) { return j.dump() + "\n"; }

json parse_line(std::string_view line) {
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.remove_suffix(1);
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    fail(CodecErrc::malformed, std::string("malformed message: ") + e.what());
  }
  if (!j.is_object()) fail(CodecErrc::malformed, "message is not a JSON object");
  auto v = j.find("v");
  if (v == j.end() || !v->is_number_integer()) fail(CodecErrc::schema_version, "missing schema version 'v'");
  if (v->get<long long>() != kSchemaVersion) {
    fail(CodecErrc::schema_version,
         "schema version " + v->dump() + " does not match supported version " + std::to_string(kSchemaVersion));
  }
  return j;
}

std::string type_of(const json& j) {
  auto t = j.find("type");
  if (t == j.end() || !t->is_string()) fail(CodecErrc::invalid_field, "missing message 'type'");
  return t->get<std::string>();
}

HandStateMessage hand_state_from(const json& j) {
  HandStateMessage m;
  m.t = number(field(j, "t"), "t");
  const bool has_joints = j.contains("q_h") || j.contains("palm_pose");
  const bool has_keypoints = j.contains("keypoints");
  if (has_joints == has_keypoints) {
    fail(CodecErrc::payload_variant, "hand_state must carry exactly one of {palm_pose, q_h} or keypoints");
  }
  if (has_joints) {
    JointPayload p;
    p.palm_pose = pose_of(field(j, "palm_pose"), "palm_pose");
    p.q_h = vector_of(field(j, "q_h"), kHumanDof, "q_h");
    m.payload = std::move(p);
  } else {
    KeypointPayload p;
    const json& kp = j.at("keypoints");
    if (!kp.is_array() || kp.size() != kKeypointCount) {
      fail(CodecErrc::invalid_field, "keypoints must hold " + std::to_string(kKeypointCount) + " points");
    }
    for (const json& k : kp) p.keypoints.push_back(vec3_of(k, "keypoint"));
    if (auto c = j.find("candidates"); c != j.end()) {
      if (!c->is_array()) fail(CodecErrc::invalid_field, "candidates must be an array");
      for (const json& cj : *c) {
        if (!cj.is_object()) fail(CodecErrc::invalid_field, "candidate must be an object");
        KeypointCandidate cand;
        const json& k = field(cj, "k");
        const json& cam = field(cj, "cam");
        if (!k.is_number_integer() || !cam.is_number_integer()) {
          fail(CodecErrc::invalid_field, "candidate k and cam must be integers");
        }
        cand.keypoint = k.get<int>();
        cand.camera = cam.get<int>();
        if (cand.keypoint < 0 || cand.keypoint >= static_cast<int>(kKeypointCount)) {
          fail(CodecErrc::invalid_field, "candidate keypoint id out of range");
        }
        cand.position = vec3_of(field(cj, "p"), "candidate.p");
        cand.confidence = number(field(cj, "conf"), "candidate.conf");
        if (cand.confidence < 0.0) fail(CodecErrc::invalid_field, "candidate confidence must be non-negative");
        p.candidates.push_back(cand);
      }
    }
    m.payload = std::move(p);
  }
  if (auto r = j.find("reregister"); r != j.end()) m.reregister = boolean(*r, "reregister");
  return m;
}

RobotCommandMessage robot_command_from(const json& j) {
  RobotCommandMessage m;
  m.t_source = number(field(j, "t_source"), "t_source");
  m.t_emit = number(field(j, "t_emit"), "t_emit");
  m.q_a = vector_of(field(j, "q_a"), kRobotDof, "q_a");
  m.palm_target = pose_of(field(j, "palm_target"), "palm_target");
  const json& d = field(j, "diagnostics");
  if (!d.is_object()) fail(CodecErrc::invalid_field, "diagnostics must be an object");
  m.diagnostics.cost = number(field(d, "cost"), "diagnostics.cost");
  m.diagnostics.solve_ms = number(field(d, "solve_ms"), "diagnostics.solve_ms");
  const json& dropped = field(d, "dropped_frames");
  if (!dropped.is_number_unsigned() && !(dropped.is_number_integer() && dropped.get<long long>() >= 0)) {
    fail(CodecErrc::invalid_field, "diagnostics.dropped_frames must be a non-negative integer");
  }
  m.diagnostics.dropped_frames = dropped.get<std::uint64_t>();
  if (auto it = d.find("iterations"); it != d.end()) {
    if (!it->is_number_integer()) fail(CodecErrc::invalid_field, "diagnostics.iterations must be an integer");
    m.diagnostics.iterations = it->get<int>();
  }
  if (auto it = d.find("converged"); it != d.end()) m.diagnostics.converged = boolean(*it, "diagnostics.converged");
  if (auto it = d.find("in_workspace"); it != d.end()) {
    m.diagnostics.in_workspace = boolean(*it, "diagnostics.in_workspace");
  }
  return m;
}

bool same_pose(const Pose& a, const Pose& b) {
  return a.rotation.coeffs() == b.rotation.coeffs() && a.translation == b.translation;
}

bool same_vector(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.size() == b.size() && a == b;
}

}  // namespace

std::string_view to_string(CodecErrc code) {
  switch (code) {
    case CodecErrc::malformed: return "malformed";
    case CodecErrc::schema_version: return "schema_version";
    case CodecErrc::payload_variant: return "payload_variant";
    case CodecErrc::invalid_field: return "invalid_field";
    case CodecErrc::unknown_type: return "unknown_type";
  }
  return "malformed";
}

CodecError::CodecError(CodecErrc code, const std::string& message) : std::runtime_error(message), code_(code) {}

std::string encode_message(const HandStateMessage& msg) {
  ordered j{{"v", kSchemaVersion}, {"type", "hand_state"}, {"t", msg.t}};
  if (const auto* p = std::get_if<JointPayload>(&msg.payload)) {
    check_dimension("q_h", kHumanDof, static_cast<std::size_t>(p->q_h.size()));
    j["palm_pose"] = pose_json(p->palm_pose);
    j["q_h"] = vec_json(p->q_h);
  } else {
    const auto& k = std::get<KeypointPayload>(msg.payload);
    check_dimension("keypoints", kKeypointCount, k.keypoints.size());
    ordered pts = ordered::array();
    for (const Vec3& p : k.keypoints) pts.push_back(vec3_json(p));
    j["keypoints"] = std::move(pts);
    if (!k.candidates.empty()) {
      ordered cands = ordered::array();
      for (const KeypointCandidate& c : k.candidates) {
        cands.push_back(ordered{{"k", c.keypoint}, {"cam", c.camera}, {"p", vec3_json(c.position)}, {"conf", c.confidence}});
      }
      j["candidates"] = std::move(cands);
    }
  }
  if (msg.reregister) j["reregister"] = true;
  return line_of(j);
}

std::string encode_message(const RobotCommandMessage& msg) {
  check_dimension("q_a", kRobotDof, static_cast<std::size_t>(msg.q_a.size()));
  const CommandDiagnostics& d = msg.diagnostics;
  ordered j{{"v", kSchemaVersion},
            {"type", "robot_command"},
            {"t_source", msg.t_source},
            {"t_emit", msg.t_emit},
            {"q_a", vec_json(msg.q_a)},
            {"palm_target", pose_json(msg.palm_target)},
            {"diagnostics",
             ordered{{"cost", d.cost},
                     {"solve_ms", d.solve_ms},
                     {"dropped_frames", d.dropped_frames},
                     {"iterations", d.iterations},
                     {"converged", d.converged},
                     {"in_workspace", d.in_workspace}}}};
  return line_of(j);
}

std::string encode_message(const Handshake& msg) {
  return line_of(ordered{{"v", msg.schema_version},
                         {"type", "handshake"},
                         {"schema_version", msg.schema_version},
                         {"human_model_sha256", msg.human_model_hash},
                         {"robot_model_sha256", msg.robot_model_hash},
                         {"config_sha256", msg.config_hash}});
}

std::string encode_message(const HandshakeReply& msg) {
  return line_of(ordered{{"v", kSchemaVersion}, {"type", "handshake_reply"}, {"accepted", msg.accepted}, {"reason", msg.reason}});
}

WireMessage decode_message(std::string_view line) {
  // A handshake carries its own schema_version so that a version mismatch can be reported
  // to the peer instead of being rejected as an unreadable line.
  json j;
  try {
    std::string_view body = line;
    while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.remove_suffix(1);
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    fail(CodecErrc::malformed, std::string("malformed message: ") + e.what());
  }
  if (j.is_object() && j.value("type", std::string()) == "handshake") {
    Handshake h;
    const json& sv = field(j, "schema_version");
    if (!sv.is_number_integer()) fail(CodecErrc::invalid_field, "schema_version must be an integer");
    h.schema_version = sv.get<int>();
    h.human_model_hash = text(field(j, "human_model_sha256"), "human_model_sha256");
    h.robot_model_hash = text(field(j, "robot_model_sha256"), "robot_model_sha256");
    h.config_hash = text(field(j, "config_sha256"), "config_sha256");
    return h;
  }
  j = parse_line(line);
  const std::string type = type_of(j);
  if (type == "hand_state") return hand_state_from(j);
  if (type == "robot_command") return robot_command_from(j);
  if (type == "handshake_reply") {
    HandshakeReply r;
    r.accepted = boolean(field(j, "accepted"), "accepted");
    if (auto it = j.find("reason"); it != j.end()) r.reason = text(*it, "reason");
    return r;
  }
  fail(CodecErrc::unknown_type, "unknown message type '" + type + "'");
}

HandStateMessage decode_hand_state(std::string_view line) {
  const json j = parse_line(line);
  if (type_of(j) != "hand_state") fail(CodecErrc::unknown_type, "expected a hand_state message");
  return hand_state_from(j);
}

RobotCommandMessage decode_robot_command(std::string_view line) {
  const json j = parse_line(line);
  if (type_of(j) != "robot_command") fail(CodecErrc::unknown_type, "expected a robot_command message");
  return robot_command_from(j);
}

bool operator==(const HandStateMessage& a, const HandStateMessage& b) {
  if (a.t != b.t || a.reregister != b.reregister || a.payload.index() != b.payload.index()) return false;
  if (const auto* pa = std::get_if<JointPayload>(&a.payload)) {
    const auto& pb = std::get<JointPayload>(b.payload);
    return same_pose(pa->palm_pose, pb.palm_pose) && same_vector(pa->q_h, pb.q_h);
  }
  const auto& ka = std::get<KeypointPayload>(a.payload);
  const auto& kb = std::get<KeypointPayload>(b.payload);
  return ka.keypoints == kb.keypoints && ka.candidates == kb.candidates;
}

bool operator==(const RobotCommandMessage& a, const RobotCommandMessage& b) {
  const CommandDiagnostics& da = a.diagnostics;
  const CommandDiagnostics& db = b.diagnostics;
  return a.t_source == b.t_source && a.t_emit == b.t_emit && same_vector(a.q_a, b.q_a) &&
         same_pose(a.palm_target, b.palm_target) && da.cost == db.cost && da.solve_ms == db.solve_ms &&
         da.dropped_frames == db.dropped_frames && da.iterations == db.iterations &&
         da.converged == db.converged && da.in_workspace == db.in_workspace;
}

void LineFramer::feed(std::string_view bytes) { buffer_.append(bytes); }

std::optional<std::string> LineFramer::next_line() {
  while (true) {
    const std::size_t nl = buffer_.find('\n', scan_);
    if (nl == std::string::npos) {
      scan_ = buffer_.size();
      if (buffer_.size() > max_line_) {
        if (!discarding_) ++overflowed_;
        discarding_ = true;
        buffer_.clear();
        scan_ = 0;
      }
      return std::nullopt;
    }
    std::string line = buffer_.substr(0, nl);
    buffer_.erase(0, nl + 1);
    scan_ = 0;
    if (discarding_) {
      discarding_ = false;
      continue;
    }
    if (line.size() > max_line_) {
      ++overflowed_;
      continue;
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  }
}

std::string LineFramer::take_remainder() {
  std::string rest = discarding_ ? std::string() : std::move(buffer_);
  buffer_.clear();
  scan_ = 0;
  discarding_ = false;
  return rest;
}

}  // namespace retarget
