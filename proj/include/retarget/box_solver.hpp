#pragma once

#include <functional>
#include <string_view>

#include <Eigen/Core>

namespace retarget {

/// Curvature model used for each step.
enum class HessianModel {
  /// JᵀJ only. One evaluation per iteration; linear convergence when residuals stay large.
  gauss_newton,
  /// Forward differences of the analytic gradient Jᵀr, symmetrized. n extra evaluations per
  /// iteration; locally quadratic convergence.
  finite_difference,
};
std::string_view to_string(HessianModel model);
HessianModel hessian_model_from_string(std::string_view name);

/// Termination settings for minimize_box_least_squares.
struct SolverOptions {
  HessianModel hessian = HessianModel::finite_difference;
  int max_iters = 100;
  /// Stop when an accepted step lowers the cost by less than cost_tol * cost.
  double cost_tol = 1e-12;
  /// Stop when an accepted step moves no coordinate by more than step_tol (radians).
  double step_tol = 1e-10;
  /// Stop when ‖projected gradient‖∞ <= grad_tol * max(cost, tiny).
  double grad_tol = 1e-10;
  /// Forward-difference step for the finite-difference Hessian (radians).
  double fd_step = 1e-7;
};

enum class StopReason { gradient, cost, step, no_progress, max_iterations };
std::string_view to_string(StopReason reason);

struct SolverResult {
  Eigen::VectorXd x;
  double cost = 0.0;
  int iterations = 0;
  int evaluations = 0;
  StopReason reason = StopReason::max_iterations;
  double projected_gradient = 0.0;

  bool converged() const { return reason != StopReason::max_iterations; }
};

/// Residuals r(x) and, when `jacobian` is non-null, J(x) = dr/dx. Cost is ½‖r‖².
using ResidualFunction =
    std::function<void(const Eigen::VectorXd& x, Eigen::VectorXd& residual, Eigen::MatrixXd* jacobian)>;

/// Componentwise gradient projected onto the feasible directions of the box.
Eigen::VectorXd projected_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& gradient,
                                   const Eigen::VectorXd& lower, const Eigen::VectorXd& upper);

/// Box-constrained nonlinear least squares: projected Levenberg–Marquardt on the free
/// variables with Marquardt (diagonal JᵀJ) scaling. Damping also absorbs indefinite
/// curvature from the finite-difference Hessian model. Every
/// accepted step strictly decreases the cost, so the returned point is the best iterate.
/// Deterministic for identical inputs.
SolverResult minimize_box_least_squares(const ResidualFunction& residuals, const Eigen::VectorXd& x0,
                                        const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                        const SolverOptions& options);

}  // namespace retarget
