#pragma once

#include <memory>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "retarget/box_solver.hpp"
#include "retarget/coupling.hpp"
#include "retarget/hand_model.hpp"
#include "retarget/retarget_config.hpp"

namespace retarget {

enum class VectorClass { normal, s1, s2 };
std::string_view to_string(VectorClass cls);

/// Human-side measurement of one task vector plus its projection class.
struct TaskVectorState {
  std::size_t spec = 0;  // index into RetargetConfig::vector_specs
  double d = 0.0;
  Vec3 r_hat = Vec3::Zero();  // zero when d is zero
  VectorClass cls = VectorClass::normal;
  bool operator==(const TaskVectorState&) const = default;
};

/// Switching weight s(d): weight_normal, weight_s1 or weight_s2 by class.
double switching_weight(const TaskVectorState& state, const RetargetConfig& config);
/// Distancing function f(d): beta*d, eta1 or eta2 by class.
double distancing(const TaskVectorState& state, const RetargetConfig& config);

/// Warm start and output filter for one retargeting stream. Single owner.
struct SolveState {
  Eigen::VectorXd q_reduced;
  Eigen::VectorXd filtered;
  bool initialized = false;
};

struct SolveDiagnostics {
  double cost = 0.0;
  int iterations = 0;
  bool converged = false;
  StopReason reason = StopReason::max_iterations;
  double solve_ms = 0.0;
  double projected_gradient = 0.0;
};

struct SolveOutput {
  JointVector q_full;  // unfiltered solver output, coupled slots expanded
  SolveDiagnostics diagnostics;
};

struct StepOutput {
  JointVector raw;
  JointVector filtered;
  SolveDiagnostics diagnostics;
};

/// y' = y + alpha (x - y), componentwise.
Eigen::VectorXd lowpass_step(const Eigen::VectorXd& y, const Eigen::VectorXd& x, double alpha);

/// First-order low-pass filter whose first update passes the input through.
class LowPassFilter {
 public:
  explicit LowPassFilter(double alpha);
  const Eigen::VectorXd& update(const Eigen::VectorXd& x);
  bool initialized() const noexcept { return initialized_; }
  const Eigen::VectorXd& state() const noexcept { return y_; }
  void reset() { initialized_ = false; }

 private:
  double alpha_;
  Eigen::VectorXd y_;
  bool initialized_ = false;
};

/// Fingertip task-space retargeting from a human hand model to a robot hand model.
///
/// The cost is
///   ½ Σᵢ s(dᵢ) ‖rᵢ(q_robot) − f(dᵢ) r̂ᵢ(q_human)‖² + γ ‖q_robot‖²
/// over the robot's reduced (coupling-free) coordinates, boxed by joint limits. dᵢ, r̂ᵢ and
/// the projection classes come from the human configuration only. The regularizer acts on
/// the expanded robot vector.
///
/// Immutable after construction; cost/gradient/classify are safe to call concurrently.
class Retargeter {
 public:
  Retargeter(std::shared_ptr<const HandModel> human, std::shared_ptr<const HandModel> robot,
             RetargetConfig config);

  const HandModel& human() const noexcept { return *human_; }
  const HandModel& robot() const noexcept { return *robot_; }
  const RetargetConfig& config() const noexcept { return config_; }
  const CouplingMap& coupling() const noexcept { return coupling_; }

  /// Two passes: fingertip→thumb vectors within epsilon become S1; then fingertip↔fingertip
  /// vectors within epsilon become S2 when both endpoints' thumb vectors are S1.
  std::vector<TaskVectorState> classify(const JointVector& q_human) const;

  double cost(const JointVector& q_human, const Eigen::VectorXd& q_reduced) const;
  Eigen::VectorXd cost_gradient(const JointVector& q_human, const Eigen::VectorXd& q_reduced) const;

  /// Warm-started bounded solve; updates state.q_reduced. Zero (projected into the box) on
  /// the first call. Throws std::domain_error on non-finite human angles.
  SolveOutput solve(const JointVector& q_human, SolveState& state) const;

  /// solve() followed by the low-pass filter held in `state`.
  StepOutput step(const JointVector& q_human, SolveState& state) const;

  /// Residual vector (√s-weighted task residuals then √(2γ)-weighted joints) and its
  /// Jacobian with respect to reduced coordinates, for fixed human-side targets.
  struct Targets {
    std::vector<Vec3> target;   // f(dᵢ) r̂ᵢ
    std::vector<double> weight; // s(dᵢ)
  };
  Targets targets(const JointVector& q_human) const;
  void residuals(const Targets& targets, const Eigen::VectorXd& q_reduced, Eigen::VectorXd& r,
                 Eigen::MatrixXd* jacobian) const;

 private:
  struct ResolvedSpec {
    std::size_t human_origin;
    std::size_t human_target;
    std::size_t robot_origin;
    std::size_t robot_target;
    // thumb-vector spec indices for both endpoints of a primary_primary vector
    std::size_t origin_thumb_spec = HandModel::npos;
    std::size_t target_thumb_spec = HandModel::npos;
  };

  std::shared_ptr<const HandModel> human_;
  std::shared_ptr<const HandModel> robot_;
  RetargetConfig config_;
  CouplingMap coupling_;
  std::vector<ResolvedSpec> resolved_;
};

}  // namespace retarget
