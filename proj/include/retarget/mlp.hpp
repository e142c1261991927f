#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace retarget {

enum class Activation { none, relu };

/// y = act(scale ∘ (W x + b) + shift). `scale`/`shift` are empty when the layer has no
/// folded batch-norm affine.
struct MlpLayer {
  Eigen::MatrixXd weight;  // out × in
  Eigen::VectorXd bias;
  Eigen::VectorXd scale;
  Eigen::VectorXd shift;
  Activation activation = Activation::none;

  Eigen::Index in_dim() const { return weight.cols(); }
  Eigen::Index out_dim() const { return weight.rows(); }
  bool has_affine() const { return scale.size() != 0; }
};

struct MlpWeights {
  Eigen::Index input_dim = 0;
  Eigen::Index output_dim = 0;
  std::vector<MlpLayer> layers;

  /// Throws DimensionError when layers do not chain or declared dims disagree, and
  /// std::invalid_argument for non-finite parameters.
  void validate() const;
};

/// Keypoint-to-angle network shape: 23 keypoints × 3 in, 20 joint angles out.
inline constexpr Eigen::Index kJointNetInput = 69;
inline constexpr Eigen::Index kJointNetOutput = 20;
inline constexpr Eigen::Index kJointNetHidden[2] = {128, 256};

/// Validates and additionally requires 69 inputs and 20 outputs.
void check_jointnet_contract(const MlpWeights& weights);

Eigen::VectorXd mlp_forward(const MlpWeights& weights, const Eigen::Ref<const Eigen::VectorXd>& input);

/// JSON: {"input_dim", "output_dim", "layers": [{"in", "out", "weight": [[row]...], "bias",
/// "affine": {"scale", "shift"} (optional), "activation": "relu"|"none"}]}.
MlpWeights parse_mlp_weights(std::string_view text);
MlpWeights load_mlp_weights(const std::string& path);
std::string serialize_mlp_weights(const MlpWeights& weights);

}  // namespace retarget
