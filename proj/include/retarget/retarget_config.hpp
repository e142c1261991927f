#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "retarget/box_solver.hpp"

namespace retarget {

enum class VectorKind { thumb_primary, primary_primary, palm_finger };

std::string_view to_string(VectorKind kind);
VectorKind vector_kind_from_string(std::string_view name);

struct FramePair {
  std::string origin;
  std::string target;
  bool operator==(const FramePair&) const = default;
};

/// One task-space vector: the human frame pair it is measured on and the robot frame pair
/// it is reproduced on.
struct TaskVectorSpec {
  std::string id;
  FramePair human;
  FramePair robot;
  VectorKind kind = VectorKind::palm_finger;
  /// Per-vector projection threshold; the global epsilon applies when unset.
  std::optional<double> epsilon;

  bool operator==(const TaskVectorSpec&) const = default;
};

/// Retargeting tunables. Distances in meters, angles in radians.
struct RetargetConfig {
  double epsilon = 0.05;
  double beta = 1.6;
  double eta1 = 1e-4;
  double eta2 = 3e-2;
  double gamma = 2.5e-3;
  double weight_normal = 1.0;
  double weight_s1 = 200.0;
  double weight_s2 = 400.0;
  double filter_alpha = 0.4;
  SolverOptions solver;
  std::vector<TaskVectorSpec> vector_specs;

  /// Throws std::invalid_argument naming the first violated constraint.
  void validate() const;
  double epsilon_for(const TaskVectorSpec& spec) const { return spec.epsilon.value_or(epsilon); }
};

/// Three fingertip→thumb vectors, three fingertip↔fingertip vectors among index, middle and
/// ring, and four palm→fingertip vectors. Frame names match the shipped model files.
std::vector<TaskVectorSpec> default_vector_specs();

/// Defaults with default_vector_specs() filled in.
RetargetConfig default_retarget_config();

nlohmann::ordered_json to_json(const RetargetConfig& config);
/// Missing keys take default values; present keys are type-checked.
RetargetConfig retarget_config_from_json(const nlohmann::json& j);

}  // namespace retarget
