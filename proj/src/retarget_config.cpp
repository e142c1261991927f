#include "retarget/retarget_config.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace retarget {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(VectorKind kind) {
  switch (kind) {
    case VectorKind::thumb_primary: return "thumb_primary";
    case VectorKind::primary_primary: return "primary_primary";
    case VectorKind::palm_finger: return "palm_finger";
  }
  return "palm_finger";
}

VectorKind vector_kind_from_string(std::string_view name) {
  if (name == "thumb_primary") return VectorKind::thumb_primary;
  if (name == "primary_primary") return VectorKind::primary_primary;
  if (name == "palm_finger") return VectorKind::palm_finger;
  throw std::invalid_argument("unknown vector kind '" + std::string(name) + "'");
}

void RetargetConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("invalid retarget config: ") + what);
  };
  require(std::isfinite(epsilon) && epsilon > 0.0, "epsilon must be > 0");
  require(std::isfinite(beta) && beta > 0.0, "beta must be > 0");
  require(std::isfinite(eta1) && std::isfinite(eta2) && 0.0 < eta1 && eta1 < eta2,
          "require 0 < eta1 < eta2");
  require(std::isfinite(gamma) && gamma >= 0.0, "gamma must be >= 0");
  require(weight_normal > 0.0 && weight_s1 > 0.0 && weight_s2 > 0.0, "weights must be > 0");
  require(std::isfinite(weight_normal) && std::isfinite(weight_s1) && std::isfinite(weight_s2),
          "weights must be finite");
  require(filter_alpha > 0.0 && filter_alpha <= 1.0, "filter_alpha must lie in (0, 1]");
  require(solver.max_iters > 0, "solver.max_iters must be > 0");
  require(solver.cost_tol >= 0.0 && solver.step_tol >= 0.0 && solver.grad_tol >= 0.0,
          "solver tolerances must be >= 0");
  require(solver.fd_step > 0.0, "solver.fd_step must be > 0");
  std::set<std::string> ids;
  for (const TaskVectorSpec& spec : vector_specs) {
    require(!spec.id.empty(), "vector spec id must be non-empty");
    require(ids.insert(spec.id).second, "vector spec ids must be unique");
    require(!spec.human.origin.empty() && !spec.human.target.empty(),
            "vector spec needs a human frame pair");
    require(!spec.robot.origin.empty() && !spec.robot.target.empty(),
            "vector spec needs a robot frame pair");
    require(!spec.epsilon || (std::isfinite(*spec.epsilon) && *spec.epsilon > 0.0),
            "vector spec epsilon must be > 0");
  }
}

std::vector<TaskVectorSpec> default_vector_specs() {
  auto same = [](std::string origin, std::string target) {
    return FramePair{std::move(origin), std::move(target)};
  };
  std::vector<TaskVectorSpec> specs;
  for (const char* finger : {"index", "middle", "ring"}) {
    const std::string tip = std::string(finger) + "_tip";
    specs.push_back({std::string(finger) + "_to_thumb", same(tip, "thumb_tip"), same(tip, "thumb_tip"),
                     VectorKind::thumb_primary, std::nullopt});
  }
  const std::pair<const char*, const char*> pairs[] = {
      {"index", "middle"}, {"middle", "ring"}, {"index", "ring"}};
  for (const auto& [a, b] : pairs) {
    const std::string ta = std::string(a) + "_tip";
    const std::string tb = std::string(b) + "_tip";
    specs.push_back({std::string(a) + "_to_" + b, same(ta, tb), same(ta, tb),
                     VectorKind::primary_primary, std::nullopt});
  }
  for (const char* finger : {"thumb", "index", "middle", "ring"}) {
    const std::string tip = std::string(finger) + "_tip";
    specs.push_back({std::string("palm_to_") + finger, same("palm", tip), same("palm", tip),
                     VectorKind::palm_finger, std::nullopt});
  }
  return specs;
}

RetargetConfig default_retarget_config() {
  RetargetConfig config;
  config.vector_specs = default_vector_specs();
  return config;
}

namespace {

ordered_json pair_json(const FramePair& p) {
  ordered_json o;
  o["origin"] = p.origin;
  o["target"] = p.target;
  return o;
}

FramePair pair_from(const json& j, const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument(where + " must be an object");
  return {j.at("origin").get<std::string>(), j.at("target").get<std::string>()};
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (const auto it = j.find(key); it != j.end()) out = it->get<T>();
}

}  // namespace

ordered_json to_json(const RetargetConfig& c) {
  ordered_json o;
  o["epsilon"] = c.epsilon;
  o["beta"] = c.beta;
  o["eta1"] = c.eta1;
  o["eta2"] = c.eta2;
  o["gamma"] = c.gamma;
  o["weight_normal"] = c.weight_normal;
  o["weight_s1"] = c.weight_s1;
  o["weight_s2"] = c.weight_s2;
  o["filter_alpha"] = c.filter_alpha;
  ordered_json s;
  s["hessian"] = std::string(to_string(c.solver.hessian));
  s["max_iters"] = c.solver.max_iters;
  s["cost_tol"] = c.solver.cost_tol;
  s["step_tol"] = c.solver.step_tol;
  s["grad_tol"] = c.solver.grad_tol;
  s["fd_step"] = c.solver.fd_step;
  o["solver"] = s;
  ordered_json specs = ordered_json::array();
  for (const TaskVectorSpec& spec : c.vector_specs) {
    ordered_json v;
    v["id"] = spec.id;
    v["kind"] = to_string(spec.kind);
    v["human"] = pair_json(spec.human);
    v["robot"] = pair_json(spec.robot);
    if (spec.epsilon) v["epsilon"] = *spec.epsilon;
    specs.push_back(std::move(v));
  }
  o["vector_specs"] = specs;
  return o;
}

RetargetConfig retarget_config_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("retarget config must be a JSON object");
  RetargetConfig c = default_retarget_config();
  try {
    read_if(j, "epsilon", c.epsilon);
    read_if(j, "beta", c.beta);
    read_if(j, "eta1", c.eta1);
    read_if(j, "eta2", c.eta2);
    read_if(j, "gamma", c.gamma);
    read_if(j, "weight_normal", c.weight_normal);
    read_if(j, "weight_s1", c.weight_s1);
    read_if(j, "weight_s2", c.weight_s2);
    read_if(j, "filter_alpha", c.filter_alpha);
    if (const auto s = j.find("solver"); s != j.end()) {
      if (const auto h = s->find("hessian"); h != s->end()) {
        c.solver.hessian = hessian_model_from_string(h->get<std::string>());
      }
      read_if(*s, "max_iters", c.solver.max_iters);
      read_if(*s, "cost_tol", c.solver.cost_tol);
      read_if(*s, "step_tol", c.solver.step_tol);
      read_if(*s, "grad_tol", c.solver.grad_tol);
      read_if(*s, "fd_step", c.solver.fd_step);
    }
    if (const auto specs = j.find("vector_specs"); specs != j.end()) {
      c.vector_specs.clear();
      for (const json& v : *specs) {
        TaskVectorSpec spec;
        spec.id = v.at("id").get<std::string>();
        spec.kind = vector_kind_from_string(v.at("kind").get<std::string>());
        spec.human = pair_from(v.at("human"), "vector_specs[" + spec.id + "].human");
        spec.robot = pair_from(v.at("robot"), "vector_specs[" + spec.id + "].robot");
        if (v.contains("epsilon")) spec.epsilon = v.at("epsilon").get<double>();
        c.vector_specs.push_back(std::move(spec));
      }
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("invalid retarget config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace retarget
