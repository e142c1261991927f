#include "retarget/mlp.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "retarget/errors.hpp"

namespace retarget {

namespace {

using json = nlohmann::json;
using ordered = nlohmann::ordered_json;

std::size_t as_size(Eigen::Index i) { return static_cast<std::size_t>(i); }

Eigen::VectorXd vector_from(const json& j, const std::string& what) {
  if (!j.is_array()) throw std::invalid_argument(what + " must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

ordered vector_json(const Eigen::VectorXd& v) {
  ordered a = ordered::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

}  // namespace

void MlpWeights::validate() const {
  if (layers.empty()) throw std::invalid_argument("network has no layers");
  check_dimension("first layer input", as_size(input_dim), as_size(layers.front().in_dim()));
  check_dimension("last layer output", as_size(output_dim), as_size(layers.back().out_dim()));
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const MlpLayer& layer = layers[l];
    const std::string where = "layer " + std::to_string(l);
    if (l > 0) check_dimension(where + " input", as_size(layers[l - 1].out_dim()), as_size(layer.in_dim()));
    check_dimension(where + " bias", as_size(layer.out_dim()), as_size(layer.bias.size()));
    if (layer.has_affine() || layer.shift.size() != 0) {
      check_dimension(where + " affine scale", as_size(layer.out_dim()), as_size(layer.scale.size()));
      check_dimension(where + " affine shift", as_size(layer.out_dim()), as_size(layer.shift.size()));
    }
    if (!layer.weight.allFinite() || !layer.bias.allFinite() || !layer.scale.allFinite() || !layer.shift.allFinite()) {
      throw std::invalid_argument(where + " has non-finite parameters");
    }
  }
}

void check_jointnet_contract(const MlpWeights& weights) {
  weights.validate();
  check_dimension("keypoint network input", as_size(kJointNetInput), as_size(weights.input_dim));
  check_dimension("keypoint network output", as_size(kJointNetOutput), as_size(weights.output_dim));
}

Eigen::VectorXd mlp_forward(const MlpWeights& weights, const Eigen::Ref<const Eigen::VectorXd>& input) {
  check_dimension("network input", as_size(weights.input_dim), as_size(input.size()));
  if (!input.allFinite()) throw std::invalid_argument("network input must be finite");
  Eigen::VectorXd x = input;
  for (const MlpLayer& layer : weights.layers) {
    check_dimension("layer input", as_size(layer.in_dim()), as_size(x.size()));
    Eigen::VectorXd y = layer.weight * x + layer.bias;
    if (layer.has_affine()) y = layer.scale.cwiseProduct(y) + layer.shift;
    if (layer.activation == Activation::relu) y = y.cwiseMax(0.0);
    x = std::move(y);
  }
  return x;
}

MlpWeights parse_mlp_weights(std::string_view text) {
  MlpWeights w;
  try {
    const json root = json::parse(text);
    w.input_dim = root.at("input_dim").get<Eigen::Index>();
    w.output_dim = root.at("output_dim").get<Eigen::Index>();
    for (const json& lj : root.at("layers")) {
      MlpLayer layer;
      const auto in = lj.at("in").get<Eigen::Index>();
      const auto out = lj.at("out").get<Eigen::Index>();
      const json& rows = lj.at("weight");
      check_dimension("weight rows", as_size(out), rows.size());
      layer.weight.resize(out, in);
      for (Eigen::Index r = 0; r < out; ++r) {
        const json& row = rows[as_size(r)];
        check_dimension("weight row length", as_size(in), row.size());
        for (Eigen::Index c = 0; c < in; ++c) layer.weight(r, c) = row[as_size(c)].get<double>();
      }
      layer.bias = vector_from(lj.at("bias"), "bias");
      if (const auto a = lj.find("affine"); a != lj.end() && !a->is_null()) {
        layer.scale = vector_from(a->at("scale"), "affine.scale");
        layer.shift = vector_from(a->at("shift"), "affine.shift");
      }
      const std::string act = lj.value("activation", std::string("none"));
      if (act == "relu") {
        layer.activation = Activation::relu;
      } else if (act == "none") {
        layer.activation = Activation::none;
      } else {
        throw std::invalid_argument("unknown activation '" + act + "'");
      }
      w.layers.push_back(std::move(layer));
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("invalid weights file: ") + e.what());
  }
  w.validate();
  return w;
}

MlpWeights load_mlp_weights(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open weights file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_mlp_weights(buf.str());
}

std::string serialize_mlp_weights(const MlpWeights& weights) {
  ordered root;
  root["input_dim"] = weights.input_dim;
  root["output_dim"] = weights.output_dim;
  ordered layers = ordered::array();
  for (const MlpLayer& layer : weights.layers) {
    ordered lj;
    lj["in"] = layer.in_dim();
    lj["out"] = layer.out_dim();
    ordered rows = ordered::array();
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) rows.push_back(vector_json(layer.weight.row(r).transpose()));
    lj["weight"] = std::move(rows);
    lj["bias"] = vector_json(layer.bias);
    if (layer.has_affine()) lj["affine"] = ordered{{"scale", vector_json(layer.scale)}, {"shift", vector_json(layer.shift)}};
    lj["activation"] = layer.activation == Activation::relu ? "relu" : "none";
    layers.push_back(std::move(lj));
  }
  root["layers"] = std::move(layers);
  return root.dump() + "\n";
}

}  // namespace retarget
