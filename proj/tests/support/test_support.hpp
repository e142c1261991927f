#pragma once

#include <memory>
#include <random>
#include <string>

#include <Eigen/Core>

#include "retarget/hand_model.hpp"

namespace testing_support {

inline std::string data_path(const std::string& relative) {
  return std::string(RETARGET_DATA_DIR) + "/" + relative;
}

inline std::shared_ptr<const retarget::HandModel> human_model() {
  static const auto model =
      std::make_shared<const retarget::HandModel>(retarget::load_model(data_path("models/human_hand.json")));
  return model;
}

inline std::shared_ptr<const retarget::HandModel> robot_model() {
  static const auto model =
      std::make_shared<const retarget::HandModel>(retarget::load_model(data_path("models/robot_hand.json")));
  return model;
}

/// Uniform sample inside the model's joint limits.
inline Eigen::VectorXd random_within_limits(const retarget::HandModel& model, std::mt19937_64& rng) {
  Eigen::VectorXd q(static_cast<Eigen::Index>(model.dof()));
  for (std::size_t d = 0; d < model.dof(); ++d) {
    const auto& lim = model.dof_joint(d).limits;
    q[static_cast<Eigen::Index>(d)] = std::uniform_real_distribution<double>(lim.lower, lim.upper)(rng);
  }
  return q;
}

inline Eigen::VectorXd random_box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, std::mt19937_64& rng) {
  Eigen::VectorXd q(lo.size());
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    q[i] = std::uniform_real_distribution<double>(lo[i], hi[i])(rng);
  }
  return q;
}

}  // namespace testing_support
