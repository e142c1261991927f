#include "retarget/box_solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Cholesky>

namespace retarget {

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::gradient: return "gradient";
    case StopReason::cost: return "cost";
    case StopReason::step: return "step";
    case StopReason::no_progress: return "no_progress";
    case StopReason::max_iterations: return "max_iterations";
  }
  return "unknown";
}

std::string_view to_string(HessianModel model) {
  return model == HessianModel::gauss_newton ? "gauss_newton" : "finite_difference";
}

HessianModel hessian_model_from_string(std::string_view name) {
  if (name == "gauss_newton") return HessianModel::gauss_newton;
  if (name == "finite_difference") return HessianModel::finite_difference;
  throw std::invalid_argument("unknown hessian model '" + std::string(name) + "'");
}

Eigen::VectorXd projected_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& gradient,
                                   const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
  Eigen::VectorXd pg = gradient;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if ((x[i] <= lower[i] && gradient[i] > 0.0) || (x[i] >= upper[i] && gradient[i] < 0.0)) pg[i] = 0.0;
  }
  return pg;
}

SolverResult minimize_box_least_squares(const ResidualFunction& residuals, const Eigen::VectorXd& x0,
                                        const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                        const SolverOptions& options) {
  const Eigen::Index n = x0.size();
  if (lower.size() != n || upper.size() != n) {
    throw std::invalid_argument("box bounds do not match the variable count");
  }
  if ((lower.array() > upper.array()).any()) throw std::invalid_argument("box lower bound exceeds upper bound");

  constexpr double kMinDamping = 1e-12;
  constexpr double kMaxDamping = 1e16;

  SolverResult result;
  Eigen::VectorXd x = x0.cwiseMax(lower).cwiseMin(upper);
  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  residuals(x, r, &jac);
  result.evaluations = 1;
  double cost = 0.5 * r.squaredNorm();
  Eigen::VectorXd g = jac.transpose() * r;
  double damping = 1e-3;

  Eigen::VectorXd r_trial;
  Eigen::MatrixXd jac_trial;
  std::vector<Eigen::Index> free;
  free.reserve(static_cast<std::size_t>(n));

  result.reason = StopReason::max_iterations;
  while (result.iterations < options.max_iters) {
    const Eigen::VectorXd pg = projected_gradient(x, g, lower, upper);
    const double pg_norm = n > 0 ? pg.lpNorm<Eigen::Infinity>() : 0.0;
    if (pg_norm == 0.0 || pg_norm <= options.grad_tol * cost) {
      result.reason = StopReason::gradient;
      break;
    }

    free.clear();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (pg[i] != 0.0 || (x[i] > lower[i] && x[i] < upper[i])) free.push_back(i);
    }
    const auto nf = static_cast<Eigen::Index>(free.size());
    const Eigen::MatrixXd gn = jac.transpose() * jac;
    Eigen::MatrixXd h_free(nf, nf);
    Eigen::VectorXd g_free(nf);
    Eigen::VectorXd scale(nf);
    for (Eigen::Index a = 0; a < nf; ++a) {
      g_free[a] = g[free[static_cast<std::size_t>(a)]];
      for (Eigen::Index b = 0; b < nf; ++b) {
        h_free(a, b) = gn(free[static_cast<std::size_t>(a)], free[static_cast<std::size_t>(b)]);
      }
    }
    const double max_diag = nf > 0 ? h_free.diagonal().maxCoeff() : 0.0;
    for (Eigen::Index a = 0; a < nf; ++a) {
      scale[a] = max_diag > 0.0 ? std::max(h_free(a, a), 1e-12 * max_diag) : 1.0;
    }
    if (options.hessian == HessianModel::finite_difference) {
      for (Eigen::Index b = 0; b < nf; ++b) {
        const Eigen::Index j = free[static_cast<std::size_t>(b)];
        const double h = x[j] + options.fd_step <= upper[j] ? options.fd_step : -options.fd_step;
        Eigen::VectorXd x_probe = x;
        x_probe[j] += h;
        residuals(x_probe, r_trial, &jac_trial);
        ++result.evaluations;
        const Eigen::VectorXd g_probe = jac_trial.transpose() * r_trial;
        for (Eigen::Index a = 0; a < nf; ++a) {
          h_free(a, b) = (g_probe[free[static_cast<std::size_t>(a)]] - g[free[static_cast<std::size_t>(a)]]) / h;
        }
      }
      h_free = (0.5 * (h_free + h_free.transpose())).eval();
    }

    ++result.iterations;
    bool accepted = false;
    while (damping <= kMaxDamping) {
      Eigen::MatrixXd system = h_free;
      system.diagonal() += damping * scale;
      const Eigen::LLT<Eigen::MatrixXd> factor(system);
      if (factor.info() != Eigen::Success) {
        damping *= 10.0;
        continue;
      }
      const Eigen::VectorXd step = factor.solve(-g_free);
      Eigen::VectorXd x_trial = x;
      for (Eigen::Index a = 0; a < nf; ++a) x_trial[free[static_cast<std::size_t>(a)]] += step[a];
      x_trial = x_trial.cwiseMax(lower).cwiseMin(upper);

      residuals(x_trial, r_trial, &jac_trial);
      ++result.evaluations;
      const double cost_trial = 0.5 * r_trial.squaredNorm();
      if (std::isfinite(cost_trial) && cost_trial < cost) {
        const double moved = (x_trial - x).lpNorm<Eigen::Infinity>();
        const double decrease = cost - cost_trial;
        const double previous = cost;
        x.swap(x_trial);
        r.swap(r_trial);
        jac.swap(jac_trial);
        cost = cost_trial;
        g = jac.transpose() * r;
        damping = std::max(damping * 0.3, kMinDamping);
        accepted = true;
        if (decrease <= options.cost_tol * previous) {
          result.reason = StopReason::cost;
        } else if (moved <= options.step_tol) {
          result.reason = StopReason::step;
        }
        break;
      }
      damping *= 10.0;
    }
    if (!accepted) {
      result.reason = StopReason::no_progress;
      break;
    }
    if (result.reason != StopReason::max_iterations) break;
  }

  result.x = std::move(x);
  result.cost = cost;
  result.projected_gradient =
      n > 0 ? projected_gradient(result.x, g, lower, upper).lpNorm<Eigen::Infinity>() : 0.0;
  return result;
}

}  // namespace retarget
