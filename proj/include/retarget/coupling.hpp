#pragma once

#include <vector>

#include <Eigen/Core>

#include "retarget/hand_model.hpp"

namespace retarget {

/// Maps between full joint coordinates and the reduced decision variables left after
/// follower joints (`coupled_to` annotations) are tied to their masters.
class CouplingMap {
 public:
  explicit CouplingMap(const HandModel& model);

  std::size_t full_dof() const noexcept { return source_.size(); }
  std::size_t reduced_dof() const noexcept { return reduced_to_full_.size(); }

  Eigen::VectorXd expand(const Eigen::Ref<const Eigen::VectorXd>& reduced) const;
  /// Drops follower slots. reduce(expand(x)) == x exactly.
  Eigen::VectorXd reduce(const Eigen::Ref<const Eigen::VectorXd>& full) const;

  /// Column-space chain rule: maps d/d(full) to d/d(reduced).
  Eigen::MatrixXd reduce_columns(const Eigen::Ref<const Eigen::MatrixXd>& full_jacobian) const;
  Eigen::VectorXd reduce_gradient(const Eigen::Ref<const Eigen::VectorXd>& full_gradient) const;

  /// Box on reduced coordinates such that every expanded value respects its own joint limits.
  const Eigen::VectorXd& reduced_lower() const noexcept { return lower_; }
  const Eigen::VectorXd& reduced_upper() const noexcept { return upper_; }

  /// Reduced index feeding full slot `full_index`, and the multiplier applied.
  std::size_t source(std::size_t full_index) const { return source_[full_index]; }
  double ratio(std::size_t full_index) const { return ratio_[full_index]; }

 private:
  std::vector<std::size_t> reduced_to_full_;
  std::vector<std::size_t> source_;
  std::vector<double> ratio_;
  Eigen::VectorXd lower_;
  Eigen::VectorXd upper_;
};

/// Reduced coordinates → full JointVector for `model`.
JointVector expand_coupling(const HandModel& model, const Eigen::Ref<const Eigen::VectorXd>& reduced);
Eigen::VectorXd reduce_coupling(const HandModel& model, const JointVector& full);

}  // namespace retarget
