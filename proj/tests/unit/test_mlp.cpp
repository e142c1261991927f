#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "retarget/errors.hpp"
#include "retarget/fixtures.hpp"
#include "retarget/mlp.hpp"

using namespace retarget;

namespace {

Eigen::VectorXd random_vector(Eigen::Index n, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return Eigen::VectorXd::NullaryExpr(n, [&] { return u(rng); });
}

Eigen::VectorXd oracle_forward(const MlpWeights& w, const Eigen::VectorXd& x) {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases, scales, shifts;
  std::vector<bool> relu;
  for (const MlpLayer& l : w.layers) {
    weights.push_back(l.weight);
    biases.push_back(l.bias);
    scales.push_back(l.scale);
    shifts.push_back(l.shift);
    relu.push_back(l.activation == Activation::relu);
  }
  return oracle::dense_forward(weights, biases, scales, shifts, relu, x);
}

MlpWeights without_offsets(MlpWeights w) {
  for (MlpLayer& l : w.layers) {
    l.bias.setZero();
    l.shift.setZero();
  }
  return w;
}

}  // namespace

TEST_CASE("zero weights return the output bias") {
  MlpWeights w = random_jointnet(1);
  for (MlpLayer& l : w.layers) l.weight.setZero();
  std::mt19937_64 rng(1);
  const Eigen::VectorXd x = random_vector(kJointNetInput, rng);
  CHECK(mlp_forward(w, x) == w.layers.back().bias);
}

TEST_CASE("random networks match the dense-algebra oracle") {
  std::mt19937_64 rng(2);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const MlpWeights w = random_jointnet(seed, 0.2);
    for (int trial = 0; trial < 5; ++trial) {
      const Eigen::VectorXd x = random_vector(kJointNetInput, rng, 0.2);
      const Eigen::VectorXd y = mlp_forward(w, x);
      REQUIRE(y.size() == kJointNetOutput);
      CHECK((y - oracle_forward(w, x)).lpNorm<Eigen::Infinity>() <= 1e-10);
    }
  }
}

TEST_CASE("ReLU zeroes negative pre-activations") {
  MlpWeights w;
  w.input_dim = 2;
  w.output_dim = 2;
  MlpLayer hidden;
  hidden.weight = Eigen::Matrix2d::Identity();
  hidden.bias = Eigen::Vector2d(0.0, -5.0);
  hidden.activation = Activation::relu;
  MlpLayer out;
  out.weight = Eigen::Matrix2d::Identity();
  out.bias = Eigen::Vector2d::Zero();
  w.layers = {hidden, out};
  const Eigen::VectorXd y = mlp_forward(w, Eigen::Vector2d(1.0, 1.0));
  CHECK(y[0] == 1.0);
  CHECK(y[1] == 0.0);
}

TEST_CASE("positive homogeneity without offsets") {
  const MlpWeights w = without_offsets(random_jointnet(3, 0.2));
  std::mt19937_64 rng(3);
  for (const double c : {0.5, 2.0, 7.0}) {
    const Eigen::VectorXd x = random_vector(kJointNetInput, rng);
    CHECK((mlp_forward(w, c * x) - c * mlp_forward(w, x)).lpNorm<Eigen::Infinity>() <= 1e-12);
  }
}

TEST_CASE("shape contract") {
  MlpWeights w = random_jointnet(4);
  CHECK_NOTHROW(check_jointnet_contract(w));
  CHECK(w.layers[0].in_dim() == 69);
  CHECK(w.layers[1].in_dim() == 128);
  CHECK(w.layers[2].in_dim() == 256);
  CHECK(w.layers[2].out_dim() == 20);
  CHECK_THROWS_AS(mlp_forward(w, Eigen::VectorXd::Zero(68)), DimensionError);

  MlpWeights broken = w;
  broken.layers[1].weight = Eigen::MatrixXd::Zero(256, 127);
  CHECK_THROWS_AS(broken.validate(), DimensionError);

  MlpWeights wrong_out = w;
  wrong_out.layers[2].weight = Eigen::MatrixXd::Zero(16, 256);
  wrong_out.layers[2].bias = Eigen::VectorXd::Zero(16);
  wrong_out.output_dim = 16;
  CHECK_NOTHROW(wrong_out.validate());
  CHECK_THROWS_AS(check_jointnet_contract(wrong_out), DimensionError);

  MlpWeights bad_bias = w;
  bad_bias.layers[0].bias = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_AS(bad_bias.validate(), DimensionError);
}

TEST_CASE("weights JSON round trip") {
  const MlpWeights w = random_jointnet(5);
  const MlpWeights back = parse_mlp_weights(serialize_mlp_weights(w));
  REQUIRE(back.layers.size() == w.layers.size());
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    CHECK(back.layers[l].weight == w.layers[l].weight);
    CHECK(back.layers[l].bias == w.layers[l].bias);
    CHECK(back.layers[l].scale == w.layers[l].scale);
    CHECK(back.layers[l].activation == w.layers[l].activation);
  }
  CHECK_THROWS_AS(parse_mlp_weights("{\"input_dim\": 2}"), std::invalid_argument);
  CHECK_THROWS_AS(parse_mlp_weights(
                      R"({"input_dim": 2, "output_dim": 1, "layers": [{"in": 2, "out": 1, "weight": [[1, 2, 3]], "bias": [0]}]})"),
                  DimensionError);
  CHECK_THROWS_AS(parse_mlp_weights(
                      R"({"input_dim": 2, "output_dim": 1, "layers": [{"in": 2, "out": 1, "weight": [[1, 2]], "bias": [0], "activation": "tanh"}]})"),
                  std::invalid_argument);
}
