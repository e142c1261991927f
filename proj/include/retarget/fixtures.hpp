#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "retarget/hand_model.hpp"
#include "retarget/messages.hpp"
#include "retarget/mlp.hpp"
#include "retarget/registration.hpp"

namespace retarget {

/// Human configuration with the thumb tip and each listed fingertip drawn together: minimizes
/// Σ‖tip_f − tip_thumb‖² + λ‖q‖² over the thumb and listed finger joints, others held at zero.
Eigen::VectorXd grasp_configuration(const HandModel& human, const std::vector<std::string>& fingers,
                                    double regularization = 1e-5);

/// Keypoints in world coordinates: per finger (model finger order) the origins of links 1..3
/// and the fingertip, then the three back-of-palm points. Requires five fingers whose joints
/// are named "<finger>_joint0..3" and child links "<finger>_link0..3".
std::vector<Vec3> hand_keypoints(const HandModel& human, const Eigen::VectorXd& q, const Pose& palm_pose);

/// Back-of-palm keypoints in the palm frame; frame_from_palm_keypoints of these gives the
/// keypoint frame, whose pose in the palm frame is palm_keypoint_frame().
const std::vector<Vec3>& palm_keypoint_offsets();
Pose palm_keypoint_frame();

/// Keypoints expressed in the keypoint frame, flattened row by row: the network input.
Eigen::VectorXd keypoint_features(const std::vector<Vec3>& keypoints, const Pose& keypoint_frame);

enum class FixtureKind { open_hand, pinch_close, two_finger, random_walk };
std::string_view to_string(FixtureKind kind);
FixtureKind fixture_kind_from_string(std::string_view name);

struct FixtureOptions {
  double rate_hz = 30.0;
  /// 0 selects the per-kind default length.
  std::size_t frames = 0;
  std::uint64_t seed = 1;
  /// Palm pose at the start of the trajectory, camera coordinates.
  Pose palm_start = Pose::from_translation(Vec3(0.0, 0.0, 0.5));
  /// Random-walk palm positions stay inside this volume.
  WorkspaceBounds volume{Vec3(0.0, 0.0, 0.5), Vec3(0.80, 0.55, 0.38)};
  /// Emit keypoint payloads instead of joint payloads.
  bool keypoints = false;
  /// Per-keypoint camera candidates (keypoint payloads only); 0 disables candidates.
  int cameras = 0;
  double candidate_noise = 0.001;  // meters, per axis
  /// Probability that a candidate is replaced by a 10 cm outlier.
  double outlier_rate = 0.0;
};

std::vector<HandStateMessage> make_fixture(FixtureKind kind, const HandModel& human, const FixtureOptions& options);

/// One encoded message per line.
std::string to_jsonl(const std::vector<HandStateMessage>& messages);

/// Deterministic random network with the 69→128→256→20 shape, folded affine and ReLU on the
/// hidden layers. Structural fixture only; it is not a trained model.
MlpWeights random_jointnet(std::uint64_t seed, double scale = 0.05);

}  // namespace retarget
