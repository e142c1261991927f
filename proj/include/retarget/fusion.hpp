#pragma once

#include <array>
#include <cstddef>
#include <deque>
#include <optional>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "retarget/messages.hpp"
#include "retarget/pose.hpp"

namespace retarget {

/// Palm keypoints are collinear or coincident.
class DegenerateGeometryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// pᵢ = exp(−α(dᵢ − min d)) / Σⱼ exp(−α(dⱼ − min d)).
std::vector<double> softmax_probabilities(const std::vector<double>& distances, double alpha);

struct SelectionConfig {
  double alpha = 500.0;
  double p_min = 0.2;
  /// Candidates whose TTA standard deviation exceeds this are dropped first (meters).
  double confidence_max = 0.01;
};

struct Selection {
  std::vector<std::size_t> accepted;  // indices into the candidate list, in input order
  std::vector<double> probabilities;  // per candidate; 0 for confidence-gated ones
};

/// Confidence gate, then softmax over distances to `previous`; keeps pᵢ > p_min. Without a
/// previous position every confidence-passing candidate is accepted.
Selection select_candidates(const std::vector<KeypointCandidate>& candidates, const std::optional<Vec3>& previous,
                            const SelectionConfig& config);

/// Fixed-capacity FIFO of recent accepted positions for one keypoint.
class RollingBuffer {
 public:
  explicit RollingBuffer(std::size_t capacity = 5);

  void push(const Vec3& p);
  std::size_t size() const noexcept { return points_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  bool empty() const noexcept { return points_.empty(); }
  std::vector<Vec3> points() const { return {points_.begin(), points_.end()}; }
  void clear() { points_.clear(); }

 private:
  std::size_t capacity_;
  std::deque<Vec3> points_;
};

struct MedianOptions {
  double tol = 1e-9;  // meters, on the step length
  int max_iters = 1000;
  bool record_objective = false;
};

struct MedianResult {
  Vec3 point = Vec3::Zero();
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Objective at the start point and after every iteration when requested.
  std::vector<double> objective_history;
};

/// Σᵢ ‖m − pᵢ‖.
double sum_of_distances(const std::vector<Vec3>& points, const Vec3& m);

/// Weiszfeld iteration from the centroid, with the Vardi–Zhang update when an iterate
/// coincides with input points. The best input point is returned instead whenever it is
/// at least as good, so the result never loses to an input point or the centroid.
MedianResult geometric_median(const std::vector<Vec3>& points, const MedianOptions& options = {});

/// Origin p_a, x̂ toward p_b, ẑ normal to the triangle, ŷ = ẑ × x̂.
Pose frame_from_palm_keypoints(const Vec3& p_a, const Vec3& p_b, const Vec3& p_c);

/// Keeps points inside the closed axis-aligned box of size `box_dims` centered on the hand frame.
std::vector<Vec3> segment_hand_points(const std::vector<Vec3>& points, const Pose& hand_pose, const Vec3& box_dims);

struct TtaStatistics {
  Vec3 mean = Vec3::Zero();
  double std = 0.0;  // sqrt of the mean of per-axis population variances
};
TtaStatistics tta_confidence(const std::vector<Vec3>& predictions);

struct FusionConfig {
  SelectionConfig selection;
  std::size_t buffer_capacity = 5;
  MedianOptions median;
};

nlohmann::ordered_json to_json(const FusionConfig& config);
FusionConfig fusion_config_from_json(const nlohmann::json& j);

/// Per-keypoint candidate rejection, buffering and geometric-median smoothing for a
/// 23-keypoint stream. Single owner.
class KeypointFuser {
 public:
  explicit KeypointFuser(FusionConfig config = {});

  /// Candidates for a keypoint replace its direct observation; a keypoint whose candidates
  /// are all rejected keeps its buffered history, falling back to the direct observation
  /// when the buffer is empty.
  std::vector<Vec3> update(const KeypointPayload& frame);
  void reset();
  std::size_t rejected() const noexcept { return rejected_; }

 private:
  FusionConfig config_;
  std::vector<RollingBuffer> buffers_;
  std::vector<std::optional<Vec3>> previous_;
  std::size_t rejected_ = 0;
};

}  // namespace retarget
