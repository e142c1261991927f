#include "retarget/coupling.hpp"

#include <algorithm>
#include <limits>

namespace retarget {

CouplingMap::CouplingMap(const HandModel& model)
    : source_(model.dof(), 0), ratio_(model.dof(), 1.0) {
  std::vector<std::size_t> reduced_of(model.dof(), HandModel::npos);
  for (std::size_t d = 0; d < model.dof(); ++d) {
    if (model.dof_joint(d).coupled_to) continue;
    reduced_of[d] = reduced_to_full_.size();
    reduced_to_full_.push_back(d);
  }
  for (std::size_t d = 0; d < model.dof(); ++d) {
    const auto& coupling = model.dof_joint(d).coupled_to;
    if (!coupling) {
      source_[d] = reduced_of[d];
      continue;
    }
    const std::size_t master = model.dof_index(coupling->master);
    source_[d] = reduced_of[master];
    ratio_[d] = coupling->ratio;
  }

  const auto n = static_cast<Eigen::Index>(reduced_dof());
  lower_ = Eigen::VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
  upper_ = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  for (std::size_t d = 0; d < model.dof(); ++d) {
    const JointLimits& lim = model.dof_joint(d).limits;
    const auto r = static_cast<Eigen::Index>(source_[d]);
    double lo = lim.lower / ratio_[d];
    double hi = lim.upper / ratio_[d];
    if (lo > hi) std::swap(lo, hi);
    lower_[r] = std::max(lower_[r], lo);
    upper_[r] = std::min(upper_[r], hi);
  }
  for (Eigen::Index r = 0; r < n; ++r) {
    if (lower_[r] > upper_[r]) {
      throw ModelError(ModelErrc::bad_coupling,
                       "coupled joint limits have an empty intersection for '" +
                           model.dof_joint(reduced_to_full_[static_cast<std::size_t>(r)]).name + "'");
    }
  }
}

Eigen::VectorXd CouplingMap::expand(const Eigen::Ref<const Eigen::VectorXd>& reduced) const {
  check_dimension("reduced joint vector", reduced_dof(), static_cast<std::size_t>(reduced.size()));
  Eigen::VectorXd full(static_cast<Eigen::Index>(full_dof()));
  for (std::size_t d = 0; d < full_dof(); ++d) {
    const double v = reduced[static_cast<Eigen::Index>(source_[d])];
    full[static_cast<Eigen::Index>(d)] = ratio_[d] == 1.0 ? v : ratio_[d] * v;
  }
  return full;
}

Eigen::VectorXd CouplingMap::reduce(const Eigen::Ref<const Eigen::VectorXd>& full) const {
  check_dimension("full joint vector", full_dof(), static_cast<std::size_t>(full.size()));
  Eigen::VectorXd reduced(static_cast<Eigen::Index>(reduced_dof()));
  for (std::size_t r = 0; r < reduced_dof(); ++r) {
    reduced[static_cast<Eigen::Index>(r)] = full[static_cast<Eigen::Index>(reduced_to_full_[r])];
  }
  return reduced;
}

Eigen::MatrixXd CouplingMap::reduce_columns(const Eigen::Ref<const Eigen::MatrixXd>& full_jacobian) const {
  check_dimension("jacobian columns", full_dof(), static_cast<std::size_t>(full_jacobian.cols()));
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(full_jacobian.rows(), static_cast<Eigen::Index>(reduced_dof()));
  for (std::size_t d = 0; d < full_dof(); ++d) {
    out.col(static_cast<Eigen::Index>(source_[d])) += ratio_[d] * full_jacobian.col(static_cast<Eigen::Index>(d));
  }
  return out;
}

Eigen::VectorXd CouplingMap::reduce_gradient(const Eigen::Ref<const Eigen::VectorXd>& full_gradient) const {
  check_dimension("gradient", full_dof(), static_cast<std::size_t>(full_gradient.size()));
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(reduced_dof()));
  for (std::size_t d = 0; d < full_dof(); ++d) {
    out[static_cast<Eigen::Index>(source_[d])] += ratio_[d] * full_gradient[static_cast<Eigen::Index>(d)];
  }
  return out;
}

JointVector expand_coupling(const HandModel& model, const Eigen::Ref<const Eigen::VectorXd>& reduced) {
  return {model.name(), CouplingMap(model).expand(reduced)};
}

Eigen::VectorXd reduce_coupling(const HandModel& model, const JointVector& full) {
  check_joint_vector(model, full);
  return CouplingMap(model).reduce(full.values);
}

}  // namespace retarget
