#include "retarget/fusion.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

#include <Eigen/Geometry>

#include "retarget/errors.hpp"

namespace retarget {

namespace {

constexpr double kCoincident = 1e-12;
constexpr double kMinTriangleArea = 1e-10;

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
  if (const auto it = j.find(key); it != j.end()) out = it->get<T>();
}

/// Resultant of unit vectors from the other points toward `p`, and how many points equal `p`.
std::pair<Vec3, std::size_t> pull_at(const std::vector<Vec3>& points, const Vec3& p) {
  Vec3 resultant = Vec3::Zero();
  std::size_t coincident = 0;
  for (const Vec3& q : points) {
    const double d = (q - p).norm();
    if (d <= kCoincident) {
      ++coincident;
    } else {
      resultant += (q - p) / d;
    }
  }
  return {resultant, coincident};
}

}  // namespace

std::vector<double> softmax_probabilities(const std::vector<double>& distances, double alpha) {
  if (distances.empty()) throw std::invalid_argument("softmax over an empty distance list");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("softmax alpha must be positive");
  for (double d : distances) {
    if (!std::isfinite(d)) throw std::invalid_argument("softmax distances must be finite");
  }
  const double d_min = *std::min_element(distances.begin(), distances.end());
  std::vector<double> p(distances.size());
  double total = 0.0;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    p[i] = std::exp(-alpha * (distances[i] - d_min));
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

Selection select_candidates(const std::vector<KeypointCandidate>& candidates, const std::optional<Vec3>& previous,
                            const SelectionConfig& config) {
  Selection out;
  out.probabilities.assign(candidates.size(), 0.0);
  std::vector<std::size_t> gated;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].confidence <= config.confidence_max) gated.push_back(i);
  }
  if (gated.empty()) return out;
  if (!previous) {
    for (std::size_t i : gated) out.probabilities[i] = 1.0 / static_cast<double>(gated.size());
    out.accepted = gated;
    return out;
  }
  std::vector<double> distances;
  distances.reserve(gated.size());
  for (std::size_t i : gated) distances.push_back((candidates[i].position - *previous).norm());
  const std::vector<double> p = softmax_probabilities(distances, config.alpha);
  for (std::size_t k = 0; k < gated.size(); ++k) {
    out.probabilities[gated[k]] = p[k];
    if (p[k] > config.p_min) out.accepted.push_back(gated[k]);
  }
  return out;
}

RollingBuffer::RollingBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("rolling buffer capacity must be positive");
}

void RollingBuffer::push(const Vec3& p) {
  if (points_.size() == capacity_) points_.pop_front();
  points_.push_back(p);
}

double sum_of_distances(const std::vector<Vec3>& points, const Vec3& m) {
  double total = 0.0;
  for (const Vec3& p : points) total += (p - m).norm();
  return total;
}

MedianResult geometric_median(const std::vector<Vec3>& points, const MedianOptions& options) {
  if (points.empty()) throw std::invalid_argument("geometric median of an empty point set");
  MedianResult result;

  // Best input point: it is optimal exactly when the pull of the others does not exceed
  // its multiplicity.
  std::size_t best = 0;
  double best_objective = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double f = sum_of_distances(points, points[i]);
    if (f < best_objective) {
      best_objective = f;
      best = i;
    }
  }
  {
    const auto [pull, multiplicity] = pull_at(points, points[best]);
    if (pull.norm() <= static_cast<double>(multiplicity)) {
      result.point = points[best];
      result.objective = best_objective;
      result.converged = true;
      if (options.record_objective) result.objective_history.push_back(best_objective);
      return result;
    }
  }

  Vec3 y = Vec3::Zero();
  for (const Vec3& p : points) y += p;
  y /= static_cast<double>(points.size());
  double objective = sum_of_distances(points, y);
  if (options.record_objective) result.objective_history.push_back(objective);

  while (result.iterations < options.max_iters) {
    Vec3 weighted = Vec3::Zero();
    double weight_sum = 0.0;
    Vec3 pull = Vec3::Zero();
    std::size_t coincident = 0;
    for (const Vec3& p : points) {
      const double d = (p - y).norm();
      if (d <= kCoincident) {
        ++coincident;
        continue;
      }
      weighted += p / d;
      weight_sum += 1.0 / d;
      pull += (p - y) / d;
    }
    ++result.iterations;
    Vec3 next;
    if (coincident == 0) {
      next = weighted / weight_sum;
    } else {
      const double r = pull.norm();
      const double eta = static_cast<double>(coincident);
      if (r <= eta) {
        result.converged = true;
        break;
      }
      next = std::max(0.0, 1.0 - eta / r) * (weighted / weight_sum) + std::min(1.0, eta / r) * y;
    }
    const double step = (next - y).norm();
    const double next_objective = sum_of_distances(points, next);
    assert(next_objective <= objective * (1.0 + 1e-12) + 1e-15);
    y = next;
    objective = next_objective;
    if (options.record_objective) result.objective_history.push_back(objective);
    if (step < options.tol) {
      result.converged = true;
      break;
    }
  }

  result.point = y;
  result.objective = objective;
  if (best_objective <= objective) {
    result.point = points[best];
    result.objective = best_objective;
  }
  return result;
}

Pose frame_from_palm_keypoints(const Vec3& p_a, const Vec3& p_b, const Vec3& p_c) {
  if (!p_a.allFinite() || !p_b.allFinite() || !p_c.allFinite()) {
    throw std::invalid_argument("palm keypoints must be finite");
  }
  const Vec3 ab = p_b - p_a;
  const Vec3 ac = p_c - p_a;
  const Vec3 normal = ab.cross(ac);
  if (0.5 * normal.norm() <= kMinTriangleArea) {
    throw DegenerateGeometryError("palm keypoints are collinear or coincident");
  }
  const Vec3 x = ab.normalized();
  const Vec3 z = x.cross(ac).normalized();
  const Vec3 y = z.cross(x);
  Mat3 r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  Pose pose;
  pose.rotation = Quat(r).normalized();
  pose.translation = p_a;
  return pose;
}

std::vector<Vec3> segment_hand_points(const std::vector<Vec3>& points, const Pose& hand_pose, const Vec3& box_dims) {
  if (!(box_dims.array() > 0.0).all()) throw std::invalid_argument("box dimensions must be positive");
  const Pose to_hand = hand_pose.inverse();
  const Vec3 half = 0.5 * box_dims;
  std::vector<Vec3> kept;
  for (const Vec3& p : points) {
    const Vec3 local = to_hand * p;
    if ((local.cwiseAbs().array() <= half.array()).all()) kept.push_back(p);
  }
  return kept;
}

TtaStatistics tta_confidence(const std::vector<Vec3>& predictions) {
  if (predictions.empty()) throw std::invalid_argument("TTA statistics need at least one prediction");
  TtaStatistics s;
  for (const Vec3& p : predictions) s.mean += p;
  s.mean /= static_cast<double>(predictions.size());
  Vec3 variance = Vec3::Zero();
  for (const Vec3& p : predictions) variance += (p - s.mean).cwiseAbs2();
  variance /= static_cast<double>(predictions.size());
  s.std = std::sqrt(variance.mean());
  return s;
}

nlohmann::ordered_json to_json(const FusionConfig& config) {
  nlohmann::ordered_json j;
  j["alpha"] = config.selection.alpha;
  j["p_min"] = config.selection.p_min;
  j["confidence_max"] = config.selection.confidence_max;
  j["buffer_capacity"] = config.buffer_capacity;
  j["median_tol"] = config.median.tol;
  j["median_max_iters"] = config.median.max_iters;
  return j;
}

FusionConfig fusion_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("fusion config must be a JSON object");
  FusionConfig c;
  try {
    read_if(j, "alpha", c.selection.alpha);
    read_if(j, "p_min", c.selection.p_min);
    read_if(j, "confidence_max", c.selection.confidence_max);
    read_if(j, "buffer_capacity", c.buffer_capacity);
    read_if(j, "median_tol", c.median.tol);
    read_if(j, "median_max_iters", c.median.max_iters);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("invalid fusion config: ") + e.what());
  }
  if (!(c.selection.alpha > 0.0)) throw std::invalid_argument("fusion.alpha must be > 0");
  if (!(c.selection.p_min >= 0.0 && c.selection.p_min < 1.0)) throw std::invalid_argument("fusion.p_min must lie in [0, 1)");
  if (!(c.selection.confidence_max >= 0.0)) throw std::invalid_argument("fusion.confidence_max must be >= 0");
  if (c.buffer_capacity == 0) throw std::invalid_argument("fusion.buffer_capacity must be > 0");
  if (!(c.median.tol > 0.0) || c.median.max_iters <= 0) throw std::invalid_argument("fusion median settings must be positive");
  return c;
}

KeypointFuser::KeypointFuser(FusionConfig config)
    : config_(config), buffers_(kKeypointCount, RollingBuffer(config.buffer_capacity)), previous_(kKeypointCount) {}

std::vector<Vec3> KeypointFuser::update(const KeypointPayload& frame) {
  check_dimension("keypoints", kKeypointCount, frame.keypoints.size());
  std::vector<std::vector<KeypointCandidate>> per_keypoint(kKeypointCount);
  for (const KeypointCandidate& c : frame.candidates) {
    if (c.keypoint < 0 || static_cast<std::size_t>(c.keypoint) >= kKeypointCount) {
      throw std::invalid_argument("candidate keypoint id out of range");
    }
    per_keypoint[static_cast<std::size_t>(c.keypoint)].push_back(c);
  }

  std::vector<Vec3> fused(kKeypointCount);
  for (std::size_t k = 0; k < kKeypointCount; ++k) {
    RollingBuffer& buffer = buffers_[k];
    if (per_keypoint[k].empty()) {
      buffer.push(frame.keypoints[k]);
    } else {
      const Selection sel = select_candidates(per_keypoint[k], previous_[k], config_.selection);
      rejected_ += per_keypoint[k].size() - sel.accepted.size();
      for (std::size_t i : sel.accepted) buffer.push(per_keypoint[k][i].position);
      if (buffer.empty()) buffer.push(frame.keypoints[k]);
    }
    fused[k] = geometric_median(buffer.points(), config_.median).point;
    previous_[k] = fused[k];
  }
  return fused;
}

void KeypointFuser::reset() {
  for (RollingBuffer& b : buffers_) b.clear();
  std::fill(previous_.begin(), previous_.end(), std::nullopt);
  rejected_ = 0;
}

}  // namespace retarget
