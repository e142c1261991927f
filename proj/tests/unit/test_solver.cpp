#include <doctest.h>

#include <cmath>
#include <random>

#include "retarget/box_solver.hpp"
#include "retarget/coupling.hpp"
#include "test_support.hpp"

using namespace retarget;
using testing_support::robot_model;

TEST_CASE("clamped quadratic lands on the box projection") {
  // ½‖x − c‖² with c partly outside the box: the minimizer is clamp(c).
  Eigen::VectorXd c(4);
  c << 2.0, -3.0, 0.25, 0.9;
  const Eigen::VectorXd lo = Eigen::VectorXd::Constant(4, -1.0);
  const Eigen::VectorXd hi = Eigen::VectorXd::Constant(4, 1.0);
  const ResidualFunction fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd* j) {
    r = x - c;
    if (j != nullptr) *j = Eigen::MatrixXd::Identity(4, 4);
  };
  const SolverResult res = minimize_box_least_squares(fn, Eigen::VectorXd::Zero(4), lo, hi, SolverOptions{});
  CHECK(res.converged());
  Eigen::VectorXd expected(4);
  expected << 1.0, -1.0, 0.25, 0.9;
  CHECK((res.x - expected).lpNorm<Eigen::Infinity>() <= 1e-10);
  CHECK(res.cost == doctest::Approx(0.5 * (1.0 + 4.0)).epsilon(1e-12));
}

TEST_CASE("bounded Rosenbrock") {
  const ResidualFunction fn = [](const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd* j) {
    r.resize(2);
    r << 10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0];
    if (j != nullptr) {
      j->resize(2, 2);
      *j << -20.0 * x[0], 10.0, -1.0, 0.0;
    }
  };
  Eigen::Vector2d x0(-1.2, 1.0);
  SUBCASE("interior minimum") {
    const SolverResult res = minimize_box_least_squares(fn, x0, Eigen::Vector2d(-2, -2), Eigen::Vector2d(2, 2), SolverOptions{});
    CHECK(res.converged());
    CHECK((res.x - Eigen::Vector2d(1, 1)).norm() <= 1e-8);
  }
  SUBCASE("active upper bound on x0") {
    // with x0 <= 0.5 the minimizer sits on the bound at (0.5, 0.25)
    const SolverResult res =
        minimize_box_least_squares(fn, x0, Eigen::Vector2d(-2, -2), Eigen::Vector2d(0.5, 2), SolverOptions{});
    CHECK(res.converged());
    CHECK((res.x - Eigen::Vector2d(0.5, 0.25)).norm() <= 1e-8);
  }
}

TEST_CASE("infeasible start is projected and bad inputs are rejected") {
  const ResidualFunction fn = [](const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd* j) {
    r = x;
    if (j != nullptr) *j = Eigen::MatrixXd::Identity(x.size(), x.size());
  };
  const Eigen::VectorXd lo = Eigen::VectorXd::Constant(2, 0.5);
  const Eigen::VectorXd hi = Eigen::VectorXd::Constant(2, 1.0);
  const SolverResult res = minimize_box_least_squares(fn, Eigen::VectorXd::Constant(2, 5.0), lo, hi, SolverOptions{});
  CHECK((res.x - lo).norm() == 0.0);
  CHECK_THROWS_AS(minimize_box_least_squares(fn, Eigen::VectorXd::Zero(2), hi, lo, SolverOptions{}), std::invalid_argument);
}

TEST_CASE("projected gradient zeroes blocked directions") {
  Eigen::Vector3d x(0.0, 1.0, 0.5), g(1.0, -1.0, 2.0);
  const Eigen::Vector3d pg = projected_gradient(x, g, Eigen::Vector3d::Zero(), Eigen::Vector3d::Ones());
  CHECK(pg == Eigen::Vector3d(0.0, 0.0, 2.0));
}

TEST_CASE("coupling map on the shipped robot") {
  const CouplingMap cm(*robot_model());
  CHECK(cm.full_dof() == 16);
  CHECK(cm.reduced_dof() == 13);
  for (const char* finger : {"index", "middle", "ring"}) {
    const std::size_t distal = robot_model()->dof_index(std::string(finger) + "_joint3");
    const std::size_t medial = robot_model()->dof_index(std::string(finger) + "_joint2");
    CHECK(cm.source(distal) == cm.source(medial));
    CHECK(cm.ratio(distal) == 1.0);
  }
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::VectorXd x = testing_support::random_box(cm.reduced_lower(), cm.reduced_upper(), rng);
    const Eigen::VectorXd full = cm.expand(x);
    CHECK(cm.reduce(full) == x);
    CHECK((full.array() >= robot_model()->lower_limits().array()).all());
    CHECK((full.array() <= robot_model()->upper_limits().array()).all());
  }
  // chain rule: d/dx of gᵀ E x is Eᵀ g
  Eigen::VectorXd g = Eigen::VectorXd::LinSpaced(16, 1.0, 16.0);
  const Eigen::VectorXd rg = cm.reduce_gradient(g);
  double total = 0.0;
  for (Eigen::Index i = 0; i < rg.size(); ++i) total += rg[i];
  CHECK(total == doctest::Approx(g.sum()));
  CHECK(expand_coupling(*robot_model(), Eigen::VectorXd::Zero(13)).values.size() == 16);
  CHECK_THROWS_AS(cm.expand(Eigen::VectorXd::Zero(12)), DimensionError);
}

TEST_CASE("models without couplings map identically") {
  const HandModel& human = *testing_support::human_model();
  const CouplingMap cm(human);
  CHECK(cm.reduced_dof() == human.dof());
  std::mt19937_64 rng(5);
  const Eigen::VectorXd q = testing_support::random_within_limits(human, rng);
  CHECK(cm.expand(q) == q);
  CHECK(cm.reduce(q) == q);
  CHECK(cm.reduced_lower() == human.lower_limits());
}
