#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "retarget/pose.hpp"

namespace retarget {

/// Wire schema version carried by every line and checked on decode.
inline constexpr int kSchemaVersion = 1;
inline constexpr std::size_t kHumanDof = 20;
inline constexpr std::size_t kRobotDof = 16;
inline constexpr std::size_t kKeypointCount = 23;
/// Indices of the three back-of-palm keypoints (origin, x direction, in-plane point).
inline constexpr std::size_t kPalmKeypoints[3] = {20, 21, 22};

/// One per-camera observation of a keypoint with its test-time-augmentation spread.
struct KeypointCandidate {
  int keypoint = 0;
  int camera = 0;
  Vec3 position = Vec3::Zero();
  double confidence = 0.0;  // standard deviation, meters
  bool operator==(const KeypointCandidate&) const = default;
};

struct JointPayload {
  Pose palm_pose;
  Eigen::VectorXd q_h;
};

struct KeypointPayload {
  std::vector<Vec3> keypoints;
  std::vector<KeypointCandidate> candidates;
};

struct HandStateMessage {
  double t = 0.0;
  std::variant<JointPayload, KeypointPayload> payload;
  /// Re-anchor the human→robot registration on this frame.
  bool reregister = false;
};

struct CommandDiagnostics {
  double cost = 0.0;
  double solve_ms = 0.0;
  std::uint64_t dropped_frames = 0;
  int iterations = 0;
  bool converged = true;
  bool in_workspace = true;
};

struct RobotCommandMessage {
  double t_source = 0.0;
  double t_emit = 0.0;
  Eigen::VectorXd q_a;
  Pose palm_target;
  CommandDiagnostics diagnostics;
};

/// First line a client sends; the server answers with HandshakeReply.
struct Handshake {
  int schema_version = kSchemaVersion;
  std::string human_model_hash;
  std::string robot_model_hash;
  std::string config_hash;
  bool operator==(const Handshake&) const = default;
};

struct HandshakeReply {
  bool accepted = false;
  std::string reason;
  bool operator==(const HandshakeReply&) const = default;
};

using WireMessage = std::variant<Handshake, HandshakeReply, HandStateMessage, RobotCommandMessage>;

enum class CodecErrc { malformed, schema_version, payload_variant, invalid_field, unknown_type };
std::string_view to_string(CodecErrc code);

class CodecError : public std::runtime_error {
 public:
  CodecError(CodecErrc code, const std::string& message);
  CodecErrc code() const noexcept { return code_; }

 private:
  CodecErrc code_;
};

/// Each encoder returns one JSON object followed by '\n'.
std::string encode_message(const HandStateMessage& msg);
std::string encode_message(const RobotCommandMessage& msg);
std::string encode_message(const Handshake& msg);
std::string encode_message(const HandshakeReply& msg);

/// Decodes one line (trailing '\n' optional). Unknown keys are ignored.
WireMessage decode_message(std::string_view line);
HandStateMessage decode_hand_state(std::string_view line);
RobotCommandMessage decode_robot_command(std::string_view line);

bool operator==(const HandStateMessage& a, const HandStateMessage& b);
bool operator==(const RobotCommandMessage& a, const RobotCommandMessage& b);

/// Splits a byte stream into newline-terminated lines. Lines longer than `max_line` are
/// discarded up to the next newline and reported once through `overflowed()`.
class LineFramer {
 public:
  explicit LineFramer(std::size_t max_line = 1 << 20) : max_line_(max_line) {}

  void feed(std::string_view bytes);
  std::optional<std::string> next_line();
  /// Unterminated bytes left at end of stream.
  std::string take_remainder();
  std::size_t overflowed() const noexcept { return overflowed_; }

 private:
  std::size_t max_line_;
  std::string buffer_;
  std::size_t scan_ = 0;
  bool discarding_ = false;
  std::size_t overflowed_ = 0;
};

}  // namespace retarget
