#include "retarget/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "retarget/box_solver.hpp"
#include "retarget/errors.hpp"
#include "retarget/fusion.hpp"

namespace retarget {

namespace {

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

double smoothstep(double s) {
  s = std::clamp(s, 0.0, 1.0);
  return s * s * (3.0 - 2.0 * s);
}

Eigen::VectorXd clamp_q(const HandModel& model, const Eigen::VectorXd& q) {
  return q.cwiseMax(model.lower_limits()).cwiseMin(model.upper_limits());
}

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 v(n(rng), n(rng), n(rng));
  while (v.norm() < 1e-9) v = Vec3(n(rng), n(rng), n(rng));
  return v.normalized();
}

std::size_t default_length(FixtureKind kind) {
  switch (kind) {
    case FixtureKind::open_hand: return 60;
    case FixtureKind::pinch_close:
    case FixtureKind::two_finger: return 70;
    case FixtureKind::random_walk: return 150;
  }
  return 60;
}

/// Open for the first 1/7 of the frames, close over the next 3/7, hold for the rest.
double closure_at(std::size_t i, std::size_t n) {
  const double open_end = static_cast<double>(n) / 7.0;
  const double close_end = 4.0 * static_cast<double>(n) / 7.0;
  return smoothstep((static_cast<double>(i) - open_end) / (close_end - open_end));
}

}  // namespace

Eigen::VectorXd grasp_configuration(const HandModel& human, const std::vector<std::string>& fingers,
                                    double regularization) {
  if (human.finger("thumb") == nullptr) throw std::invalid_argument("grasp needs a finger named 'thumb'");
  std::vector<std::size_t> vars;
  for (std::size_t d = 0; d < human.dof(); ++d) {
    const std::string& name = human.dof_joint(d).name;
    bool selected = starts_with(name, "thumb_");
    for (const std::string& f : fingers) selected = selected || starts_with(name, f + "_");
    if (selected) vars.push_back(d);
  }
  const auto nv = static_cast<Eigen::Index>(vars.size());
  Eigen::VectorXd lo(nv), hi(nv);
  for (Eigen::Index i = 0; i < nv; ++i) {
    lo[i] = human.lower_limits()[static_cast<Eigen::Index>(vars[static_cast<std::size_t>(i)])];
    hi[i] = human.upper_limits()[static_cast<Eigen::Index>(vars[static_cast<std::size_t>(i)])];
  }
  const std::size_t thumb = human.require_frame(human.finger("thumb")->tip_frame);
  std::vector<std::size_t> tips;
  for (const std::string& f : fingers) {
    const FingerSpec* spec = human.finger(f);
    if (spec == nullptr) throw std::invalid_argument("unknown finger '" + f + "'");
    tips.push_back(human.require_frame(spec->tip_frame));
  }
  const double reg = std::sqrt(regularization);
  auto full = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd q = clamp_q(human, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(human.dof())));
    for (Eigen::Index i = 0; i < nv; ++i) q[static_cast<Eigen::Index>(vars[static_cast<std::size_t>(i)])] = x[i];
    return q;
  };

  const ResidualFunction fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
    const KinematicState fk = compute_kinematics(human, full(x));
    const auto rows = static_cast<Eigen::Index>(3 * tips.size()) + nv;
    r.resize(rows);
    if (jac != nullptr) jac->setZero(rows, nv);
    const Vec3 thumb_p = fk.frame_pose(human, thumb).translation;
    for (std::size_t k = 0; k < tips.size(); ++k) {
      const auto row = static_cast<Eigen::Index>(3 * k);
      const Vec3 tip_p = fk.frame_pose(human, tips[k]).translation;
      r.segment<3>(row) = tip_p - thumb_p;
      if (jac == nullptr) continue;
      for (Eigen::Index i = 0; i < nv; ++i) {
        const std::size_t d = vars[static_cast<std::size_t>(i)];
        Vec3 col = Vec3::Zero();
        if (human.moves_link(d, human.frame_link(tips[k]))) col += fk.dof_axes[d].cross(tip_p - fk.dof_points[d]);
        if (human.moves_link(d, human.frame_link(thumb))) col -= fk.dof_axes[d].cross(thumb_p - fk.dof_points[d]);
        jac->block<3, 1>(row, i) = col;
      }
    }
    for (Eigen::Index i = 0; i < nv; ++i) {
      r[static_cast<Eigen::Index>(3 * tips.size()) + i] = reg * x[i];
      if (jac != nullptr) (*jac)(static_cast<Eigen::Index>(3 * tips.size()) + i, i) = reg;
    }
  };
  SolverOptions options;
  options.max_iters = 500;
  const SolverResult result = minimize_box_least_squares(fn, Eigen::VectorXd::Zero(nv), lo, hi, options);
  return full(result.x);
}

const std::vector<Vec3>& palm_keypoint_offsets() {
  static const std::vector<Vec3> offsets{Vec3(-0.012, 0.0, -0.07), Vec3(-0.012, 0.0, -0.01), Vec3(-0.012, 0.03, -0.07)};
  return offsets;
}

Pose palm_keypoint_frame() {
  const auto& o = palm_keypoint_offsets();
  return frame_from_palm_keypoints(o[0], o[1], o[2]);
}

std::vector<Vec3> hand_keypoints(const HandModel& human, const Eigen::VectorXd& q, const Pose& palm_pose) {
  if (human.fingers().size() != 5) throw std::invalid_argument("keypoint layout needs exactly five fingers");
  const KinematicState fk = compute_kinematics(human, q);
  std::vector<Vec3> points;
  points.reserve(kKeypointCount);
  for (const FingerSpec& f : human.fingers()) {
    for (int l = 1; l <= 3; ++l) {
      const std::string link = f.name + "_link" + std::to_string(l);
      const std::size_t index = human.link_index(link);
      if (index == HandModel::npos) throw std::invalid_argument("keypoint layout needs link '" + link + "'");
      points.push_back(palm_pose * fk.links[index].translation);
    }
    points.push_back(palm_pose * fk.frame_pose(human, human.require_frame(f.tip_frame)).translation);
  }
  for (const Vec3& p : palm_keypoint_offsets()) points.push_back(palm_pose * p);
  return points;
}

Eigen::VectorXd keypoint_features(const std::vector<Vec3>& keypoints, const Pose& keypoint_frame) {
  check_dimension("keypoints", kKeypointCount, keypoints.size());
  const Pose to_local = keypoint_frame.inverse();
  Eigen::VectorXd features(static_cast<Eigen::Index>(3 * kKeypointCount));
  for (std::size_t k = 0; k < kKeypointCount; ++k) {
    features.segment<3>(static_cast<Eigen::Index>(3 * k)) = to_local * keypoints[k];
  }
  return features;
}

std::string_view to_string(FixtureKind kind) {
  switch (kind) {
    case FixtureKind::open_hand: return "open-hand";
    case FixtureKind::pinch_close: return "pinch-close";
    case FixtureKind::two_finger: return "two-finger";
    case FixtureKind::random_walk: return "random-walk";
  }
  return "open-hand";
}

FixtureKind fixture_kind_from_string(std::string_view name) {
  for (FixtureKind k : {FixtureKind::open_hand, FixtureKind::pinch_close, FixtureKind::two_finger, FixtureKind::random_walk}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown fixture '" + std::string(name) + "'");
}

std::vector<HandStateMessage> make_fixture(FixtureKind kind, const HandModel& human, const FixtureOptions& options) {
  if (!(options.rate_hz > 0.0)) throw std::invalid_argument("fixture rate must be positive");
  check_dimension("human model", kHumanDof, human.dof());
  const std::size_t n = options.frames == 0 ? default_length(kind) : options.frames;
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> unit_normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  const Eigen::VectorXd open = clamp_q(human, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(human.dof())));
  Eigen::VectorXd closed = open;
  if (kind == FixtureKind::pinch_close) closed = grasp_configuration(human, {"index"});
  if (kind == FixtureKind::two_finger) closed = grasp_configuration(human, {"index", "middle"});

  const Vec3 half = 0.5 * options.volume.size;
  Eigen::VectorXd walk_q = open;
  Pose walk_pose = options.palm_start;

  std::vector<HandStateMessage> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::VectorXd q;
    Pose palm = options.palm_start;
    switch (kind) {
      case FixtureKind::open_hand: {
        q = open;
        const double phase = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(std::max<std::size_t>(n, 1));
        palm.translation += Vec3(0.02 * std::sin(phase), 0.01 * std::sin(2.0 * phase), 0.0);
        break;
      }
      case FixtureKind::pinch_close:
      case FixtureKind::two_finger: {
        const double s = closure_at(i, n);
        q = open + s * (closed - open);
        break;
      }
      case FixtureKind::random_walk: {
        if (i > 0) {
          for (Eigen::Index d = 0; d < walk_q.size(); ++d) walk_q[d] += 0.05 * unit_normal(rng);
          walk_q = clamp_q(human, walk_q);
          Vec3 p = walk_pose.translation + 0.01 * Vec3(unit_normal(rng), unit_normal(rng), unit_normal(rng));
          for (int a = 0; a < 3; ++a) {
            const double lo = options.volume.center[a] - half[a];
            const double hi = options.volume.center[a] + half[a];
            if (p[a] > hi) p[a] = 2.0 * hi - p[a];
            if (p[a] < lo) p[a] = 2.0 * lo - p[a];
            p[a] = std::clamp(p[a], lo, hi);
          }
          walk_pose.translation = p;
          walk_pose.rotation = (axis_angle(random_unit(rng), 0.02 * unit_normal(rng)) * walk_pose.rotation).normalized();
        }
        q = walk_q;
        palm = walk_pose;
        break;
      }
    }

    HandStateMessage msg;
    msg.t = static_cast<double>(i) / options.rate_hz;
    if (options.keypoints) {
      KeypointPayload payload;
      payload.keypoints = hand_keypoints(human, q, palm);
      for (int cam = 0; cam < options.cameras; ++cam) {
        for (std::size_t k = 0; k < kKeypointCount; ++k) {
          KeypointCandidate c;
          c.keypoint = static_cast<int>(k);
          c.camera = cam;
          const Vec3 noise = options.candidate_noise * Vec3(unit_normal(rng), unit_normal(rng), unit_normal(rng));
          c.position = payload.keypoints[k] + noise;
          c.confidence = std::abs(options.candidate_noise * unit_normal(rng));
          if (uniform(rng) < options.outlier_rate) c.position = payload.keypoints[k] + 0.1 * random_unit(rng);
          payload.candidates.push_back(c);
        }
      }
      msg.payload = std::move(payload);
    } else {
      msg.payload = JointPayload{palm, q};
    }
    out.push_back(std::move(msg));
  }
  return out;
}

std::string to_jsonl(const std::vector<HandStateMessage>& messages) {
  std::string text;
  for (const HandStateMessage& m : messages) text += encode_message(m);
  return text;
}

MlpWeights random_jointnet(std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Eigen::Index dims[] = {kJointNetInput, kJointNetHidden[0], kJointNetHidden[1], kJointNetOutput};
  MlpWeights w;
  w.input_dim = kJointNetInput;
  w.output_dim = kJointNetOutput;
  for (int l = 0; l < 3; ++l) {
    MlpLayer layer;
    layer.weight = Eigen::MatrixXd::NullaryExpr(dims[l + 1], dims[l], [&] { return scale * u(rng); });
    layer.bias = Eigen::VectorXd::NullaryExpr(dims[l + 1], [&] { return scale * u(rng); });
    if (l < 2) {
      layer.scale = Eigen::VectorXd::NullaryExpr(dims[l + 1], [&] { return 1.0 + 0.1 * u(rng); });
      layer.shift = Eigen::VectorXd::NullaryExpr(dims[l + 1], [&] { return 0.01 * u(rng); });
      layer.activation = Activation::relu;
    }
    w.layers.push_back(std::move(layer));
  }
  return w;
}

}  // namespace retarget
