#include "retarget/retargeter.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace retarget {

namespace {

constexpr double kZeroDistance = 1e-12;

bool is_role_tip(const HandModel& model, const std::string& frame, FingerRole role) {
  const FingerSpec* finger = model.finger_by_tip(frame);
  return finger != nullptr && finger->role == role;
}

void check_roles(const HandModel& model, const FramePair& pair, VectorKind kind, const std::string& id) {
  bool ok = true;
  switch (kind) {
    case VectorKind::thumb_primary:
      ok = is_role_tip(model, pair.origin, FingerRole::primary) &&
           is_role_tip(model, pair.target, FingerRole::thumb);
      break;
    case VectorKind::primary_primary:
      ok = is_role_tip(model, pair.origin, FingerRole::primary) &&
           is_role_tip(model, pair.target, FingerRole::primary) && pair.origin != pair.target;
      break;
    case VectorKind::palm_finger:
      break;
  }
  if (!ok) {
    throw std::invalid_argument("vector spec '" + id + "' of kind " + std::string(to_string(kind)) +
                                " does not match finger roles in model '" + model.name() + "'");
  }
}

}  // namespace

std::string_view to_string(VectorClass cls) {
  switch (cls) {
    case VectorClass::normal: return "normal";
    case VectorClass::s1: return "s1";
    case VectorClass::s2: return "s2";
  }
  return "normal";
}

double switching_weight(const TaskVectorState& state, const RetargetConfig& config) {
  switch (state.cls) {
    case VectorClass::normal: return config.weight_normal;
    case VectorClass::s1: return config.weight_s1;
    case VectorClass::s2: return config.weight_s2;
  }
  return config.weight_normal;
}

double distancing(const TaskVectorState& state, const RetargetConfig& config) {
  switch (state.cls) {
    case VectorClass::normal: return config.beta * state.d;
    case VectorClass::s1: return config.eta1;
    case VectorClass::s2: return config.eta2;
  }
  return config.beta * state.d;
}

Eigen::VectorXd lowpass_step(const Eigen::VectorXd& y, const Eigen::VectorXd& x, double alpha) {
  check_dimension("low-pass input", static_cast<std::size_t>(y.size()), static_cast<std::size_t>(x.size()));
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("filter alpha must lie in (0, 1]");
  return y + alpha * (x - y);
}

LowPassFilter::LowPassFilter(double alpha) : alpha_(alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("filter alpha must lie in (0, 1]");
}

const Eigen::VectorXd& LowPassFilter::update(const Eigen::VectorXd& x) {
  if (!initialized_) {
    y_ = x;
    initialized_ = true;
  } else {
    y_ = lowpass_step(y_, x, alpha_);
  }
  return y_;
}

Retargeter::Retargeter(std::shared_ptr<const HandModel> human, std::shared_ptr<const HandModel> robot,
                       RetargetConfig config)
    : human_(std::move(human)), robot_(std::move(robot)), config_(std::move(config)),
      coupling_(*robot_) {
  config_.validate();
  resolved_.reserve(config_.vector_specs.size());
  for (const TaskVectorSpec& spec : config_.vector_specs) {
    check_roles(*human_, spec.human, spec.kind, spec.id);
    check_roles(*robot_, spec.robot, spec.kind, spec.id);
    resolved_.push_back({human_->require_frame(spec.human.origin), human_->require_frame(spec.human.target),
                         robot_->require_frame(spec.robot.origin), robot_->require_frame(spec.robot.target)});
  }
  const auto& specs = config_.vector_specs;
  auto thumb_spec_from = [&](const std::string& human_tip) {
    for (std::size_t k = 0; k < specs.size(); ++k) {
      if (specs[k].kind == VectorKind::thumb_primary && specs[k].human.origin == human_tip) return k;
    }
    return HandModel::npos;
  };
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (specs[i].kind != VectorKind::primary_primary) continue;
    resolved_[i].origin_thumb_spec = thumb_spec_from(specs[i].human.origin);
    resolved_[i].target_thumb_spec = thumb_spec_from(specs[i].human.target);
  }
}

std::vector<TaskVectorState> Retargeter::classify(const JointVector& q_human) const {
  check_joint_vector(*human_, q_human);
  if (!q_human.values.allFinite()) throw std::domain_error("non-finite human joint angles");
  const KinematicState fk = compute_kinematics(*human_, q_human.values);
  const auto& specs = config_.vector_specs;

  std::vector<TaskVectorState> states(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const Pose origin = fk.frame_pose(*human_, resolved_[i].human_origin);
    const Pose target = fk.frame_pose(*human_, resolved_[i].human_target);
    const Vec3 r = origin.rotation.conjugate() * (target.translation - origin.translation);
    TaskVectorState& s = states[i];
    s.spec = i;
    s.d = r.norm();
    s.r_hat = s.d > kZeroDistance ? Vec3(r / s.d) : Vec3::Zero();
    if (specs[i].kind == VectorKind::thumb_primary && s.d <= config_.epsilon_for(specs[i])) {
      s.cls = VectorClass::s1;
    }
  }
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (specs[i].kind != VectorKind::primary_primary) continue;
    const ResolvedSpec& rs = resolved_[i];
    const bool both_projected = rs.origin_thumb_spec != HandModel::npos &&
                                rs.target_thumb_spec != HandModel::npos &&
                                states[rs.origin_thumb_spec].cls == VectorClass::s1 &&
                                states[rs.target_thumb_spec].cls == VectorClass::s1;
    if (both_projected && states[i].d <= config_.epsilon_for(specs[i])) states[i].cls = VectorClass::s2;
  }
  return states;
}

Retargeter::Targets Retargeter::targets(const JointVector& q_human) const {
  const std::vector<TaskVectorState> states = classify(q_human);
  Targets t;
  t.target.reserve(states.size());
  t.weight.reserve(states.size());
  for (const TaskVectorState& s : states) {
    t.target.push_back(distancing(s, config_) * s.r_hat);
    t.weight.push_back(switching_weight(s, config_));
  }
  return t;
}

void Retargeter::residuals(const Targets& targets, const Eigen::VectorXd& q_reduced, Eigen::VectorXd& r,
                           Eigen::MatrixXd* jacobian) const {
  const Eigen::VectorXd q_full = coupling_.expand(q_reduced);
  const KinematicState fk = compute_kinematics(*robot_, q_full);
  const std::size_t n_vec = resolved_.size();
  const auto n_full = static_cast<Eigen::Index>(robot_->dof());
  const auto rows = static_cast<Eigen::Index>(3 * n_vec) + n_full;
  const double reg = std::sqrt(2.0 * config_.gamma);

  r.resize(rows);
  Eigen::MatrixXd full_jac;
  if (jacobian != nullptr) full_jac = Eigen::MatrixXd::Zero(rows, n_full);

  for (std::size_t i = 0; i < n_vec; ++i) {
    const ResolvedSpec& rs = resolved_[i];
    const double sw = std::sqrt(targets.weight[i]);
    const Pose origin = fk.frame_pose(*robot_, rs.robot_origin);
    const Pose target = fk.frame_pose(*robot_, rs.robot_target);
    const Vec3 delta = target.translation - origin.translation;
    const Mat3 rot_t = origin.rotation.conjugate().toRotationMatrix();
    const auto row = static_cast<Eigen::Index>(3 * i);
    r.segment<3>(row) = sw * (rot_t * delta - targets.target[i]);
    if (jacobian == nullptr) continue;

    const std::size_t origin_link = robot_->frame_link(rs.robot_origin);
    const std::size_t target_link = robot_->frame_link(rs.robot_target);
    for (std::size_t d = 0; d < robot_->dof(); ++d) {
      const bool moves_origin = robot_->moves_link(d, origin_link);
      const bool moves_target = robot_->moves_link(d, target_link);
      if (moves_origin == moves_target) continue;  // rigid-body motion of both ends cancels
      const Vec3& axis = fk.dof_axes[d];
      const Vec3& point = fk.dof_points[d];
      Vec3 dworld;
      if (moves_target) {
        dworld = axis.cross(target.translation - point);
      } else {
        // origin moves: its translation and its rotation both change
        dworld = -axis.cross(origin.translation - point) - axis.cross(delta);
      }
      full_jac.block<3, 1>(row, static_cast<Eigen::Index>(d)) = sw * (rot_t * dworld);
    }
  }
  const auto reg_row = static_cast<Eigen::Index>(3 * n_vec);
  r.tail(n_full) = reg * q_full;
  if (jacobian != nullptr) {
    full_jac.block(reg_row, 0, n_full, n_full).diagonal().setConstant(reg);
    *jacobian = coupling_.reduce_columns(full_jac);
  }
}

double Retargeter::cost(const JointVector& q_human, const Eigen::VectorXd& q_reduced) const {
  Eigen::VectorXd r;
  residuals(targets(q_human), q_reduced, r, nullptr);
  const auto task_rows = static_cast<Eigen::Index>(3 * resolved_.size());
  return 0.5 * r.head(task_rows).squaredNorm() + config_.gamma * coupling_.expand(q_reduced).squaredNorm();
}

Eigen::VectorXd Retargeter::cost_gradient(const JointVector& q_human, const Eigen::VectorXd& q_reduced) const {
  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  residuals(targets(q_human), q_reduced, r, &jac);
  return jac.transpose() * r;
}

SolveOutput Retargeter::solve(const JointVector& q_human, SolveState& state) const {
  const auto start = std::chrono::steady_clock::now();
  const Targets t = targets(q_human);
  const auto n = static_cast<Eigen::Index>(coupling_.reduced_dof());
  if (state.initialized) check_dimension("warm start", coupling_.reduced_dof(), static_cast<std::size_t>(state.q_reduced.size()));
  const Eigen::VectorXd x0 = state.initialized ? state.q_reduced : Eigen::VectorXd::Zero(n);

  const ResidualFunction fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
    residuals(t, x, r, jac);
  };
  const SolverResult result =
      minimize_box_least_squares(fn, x0, coupling_.reduced_lower(), coupling_.reduced_upper(), config_.solver);
  if (!result.x.allFinite() || !std::isfinite(result.cost)) {
    throw std::domain_error("retargeting solve produced non-finite joint angles");
  }

  state.q_reduced = result.x;
  state.initialized = true;

  SolveOutput out;
  out.q_full = {robot_->name(), coupling_.expand(result.x)};
  out.diagnostics.cost = result.cost;
  out.diagnostics.iterations = result.iterations;
  out.diagnostics.converged = result.converged();
  out.diagnostics.reason = result.reason;
  out.diagnostics.projected_gradient = result.projected_gradient;
  out.diagnostics.solve_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

StepOutput Retargeter::step(const JointVector& q_human, SolveState& state) const {
  const bool first = !state.initialized || state.filtered.size() == 0;
  SolveOutput solved = solve(q_human, state);
  if (first) {
    state.filtered = solved.q_full.values;
  } else {
    state.filtered = lowpass_step(state.filtered, solved.q_full.values, config_.filter_alpha);
  }
  return {solved.q_full, {robot_->name(), state.filtered}, solved.diagnostics};
}

}  // namespace retarget
