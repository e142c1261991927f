// Acceptance suite: one PASS/FAIL line per criterion; exit status is non-zero if any fail.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "cli/cli.hpp"
#include "oracles.hpp"
#include "retarget/errors.hpp"
#include "retarget/fixtures.hpp"
#include "retarget/fusion.hpp"
#include "retarget/messages.hpp"
#include "retarget/mlp.hpp"
#include "retarget/pipeline.hpp"
#include "retarget/registration.hpp"
#include "retarget/retargeter.hpp"
#include "test_support.hpp"

using namespace retarget;
using testing_support::human_model;
using testing_support::robot_model;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

Outcome verdict(bool pass, const std::string& detail) { return {pass, detail}; }

PipelineSetup default_setup() { return PipelineSetup{human_model(), robot_model(), AppConfig{}, std::nullopt}; }

std::vector<std::string> lines_of(const std::vector<HandStateMessage>& msgs) {
  std::vector<std::string> out;
  for (const auto& m : msgs) out.push_back(encode_message(m));
  return out;
}

std::vector<RobotCommandMessage> replay_commands(const std::vector<HandStateMessage>& msgs) {
  std::vector<RobotCommandMessage> out;
  run_replay(lines_of(msgs), default_setup(), [&](const std::string& l) { out.push_back(decode_robot_command(l)); });
  return out;
}

double tip_distance(const HandModel& model, const Eigen::VectorXd& q, const std::string& a, const std::string& b) {
  const auto frames = oracle::frame_matrices(model, q);
  return (frames.at(a).topRightCorner<3, 1>() - frames.at(b).topRightCorner<3, 1>()).norm();
}

Pose random_pose(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Pose p;
  p.rotation = Quat(n(rng), n(rng), n(rng), n(rng)).normalized();
  p.translation = Vec3(n(rng), n(rng), n(rng));
  return p;
}

// ---------------------------------------------------------------------------

Outcome projection_closure() {
  const auto msgs = make_fixture(FixtureKind::pinch_close, *human_model(), {});
  const auto cmds = replay_commands(msgs);
  if (cmds.size() != msgs.size()) return verdict(false, "frames lost in replay");
  const double eps = default_retarget_config().epsilon;
  std::optional<std::size_t> crossing;
  for (std::size_t i = 0; i < msgs.size() && !crossing; ++i) {
    const auto& q = std::get<JointPayload>(msgs[i].payload).q_h;
    if (tip_distance(*human_model(), q, "thumb_tip", "index_tip") <= eps) crossing = i;
  }
  if (!crossing) return verdict(false, "human never closes below epsilon");
  std::optional<std::size_t> reached;
  bool stays = true;
  double worst_after = 0.0;
  for (std::size_t i = *crossing; i < cmds.size(); ++i) {
    const double d = tip_distance(*robot_model(), cmds[i].q_a, "thumb_tip", "index_tip");
    if (!reached && d <= 0.005) reached = i;
    if (reached) {
      worst_after = std::max(worst_after, d);
      stays = stays && d <= 0.005;
    }
  }
  if (!reached) return verdict(false, "robot thumb-index never reaches 5 mm");
  const std::size_t lag = *reached - *crossing;
  return verdict(lag <= 10 && stays, "human below epsilon at frame " + std::to_string(*crossing) + ", robot <= 5 mm after " +
                                         std::to_string(lag) + " frames, max afterwards " + fmt(worst_after * 1000) + " mm");
}

Outcome s2_separation() {
  const auto msgs = make_fixture(FixtureKind::two_finger, *human_model(), {});
  const auto cmds = replay_commands(msgs);
  const Retargeter rt(human_model(), robot_model(), default_retarget_config());
  std::size_t s2_frames = 0;
  double min_sep = 1e9;
  for (std::size_t i = 0; i < msgs.size(); ++i) {
    const auto& q = std::get<JointPayload>(msgs[i].payload).q_h;
    const auto states = rt.classify(JointVector{human_model()->name(), q});
    bool index_middle_s2 = false;
    for (std::size_t k = 0; k < states.size(); ++k) {
      if (rt.config().vector_specs[k].id == "index_to_middle" && states[k].cls == VectorClass::s2) index_middle_s2 = true;
    }
    if (!index_middle_s2) continue;
    ++s2_frames;
    min_sep = std::min(min_sep, tip_distance(*robot_model(), cmds[i].q_a, "index_tip", "middle_tip"));
  }
  if (s2_frames == 0) return verdict(false, "fixture never activates the S2 class");
  return verdict(min_sep >= 0.020, std::to_string(s2_frames) + " S2 frames, min index-middle " + fmt(min_sep * 1000) + " mm");
}

Outcome solver_optimality() {
  const RetargetConfig cfg = default_retarget_config();
  const Retargeter rt(human_model(), robot_model(), cfg);
  const auto& lo = rt.coupling().reduced_lower();
  const auto& hi = rt.coupling().reduced_upper();
  std::mt19937_64 rng(2024);
  int wins = 0;
  double worst_oracle_gap = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const JointVector qh{human_model()->name(), testing_support::random_within_limits(*human_model(), rng)};
    SolveState state;
    const SolveOutput sol = rt.solve(qh, state);
    const double solved = oracle::direct_cost(*human_model(), *robot_model(), cfg, qh.values, sol.q_full.values);
    double best = std::numeric_limits<double>::infinity();
    for (int s = 0; s < 10000; ++s) best = std::min(best, rt.cost(qh, testing_support::random_box(lo, hi, rng)));
    worst_oracle_gap = std::max(worst_oracle_gap, std::abs(solved - sol.diagnostics.cost));
    if (solved <= best) ++wins;
  }
  int grad_ok = 0;
  const double h = 1e-6;
  for (int trial = 0; trial < 1000; ++trial) {
    const JointVector qh{human_model()->name(), testing_support::random_within_limits(*human_model(), rng)};
    const Eigen::VectorXd x = testing_support::random_box(lo, hi, rng);
    const Eigen::VectorXd g = rt.cost_gradient(qh, x);
    const double tol = std::max(1e-5, 1e-3 * g.norm());
    bool ok = true;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      Eigen::VectorXd xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      const double fd = (rt.cost(qh, xp) - rt.cost(qh, xm)) / (2.0 * h);
      ok = ok && std::abs(g[i] - fd) <= tol;
    }
    if (ok) ++grad_ok;
  }
  return verdict(wins >= 95 && grad_ok == 1000,
                 "solver beat 10k samples in " + std::to_string(wins) + "/100, gradient ok on " + std::to_string(grad_ok) +
                     "/1000, solver-vs-oracle cost gap " + fmt(worst_oracle_gap));
}

Outcome realtime_budget() {
  cli::BenchOptions options;
  const cli::BenchResult r = cli::run_bench(default_setup(), options);
  return verdict(r.within_budget() && r.vectors == 10 && r.overall.frames == options.frames,
                 std::to_string(r.overall.frames) + " solves, mean " + fmt(r.overall.mean_ms) + " ms, p95 " +
                     fmt(r.overall.p95_ms) + " ms, max " + fmt(r.overall.max_ms) + " ms");
}

Outcome fk_oracle() {
  std::mt19937_64 rng(5);
  double worst_t = 0.0, worst_r = 0.0;
  for (const auto& model : {human_model(), robot_model()}) {
    for (int trial = 0; trial < 50; ++trial) {
      const Eigen::VectorXd q = testing_support::random_within_limits(*model, rng);
      const auto expected = oracle::frame_matrices(*model, q);
      for (const auto& [name, pose] : forward_kinematics(*model, {model->name(), q})) {
        const Eigen::Matrix4d& m = expected.at(name);
        worst_t = std::max(worst_t, (pose.translation - m.topRightCorner<3, 1>()).norm());
        worst_r = std::max(worst_r, (pose.rotation_matrix() - m.topLeftCorner<3, 3>()).cwiseAbs().maxCoeff());
      }
    }
  }
  return verdict(worst_t <= 1e-12 && worst_r <= 1e-9, "max translation error " + fmt(worst_t) + " m, rotation " + fmt(worst_r));
}

Outcome median_oracle() {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  MedianOptions opts;
  opts.record_objective = true;
  double worst = 0.0;
  bool monotone = true;
  double worst_rise = 0.0;
  for (int set = 0; set < 100; ++set) {
    const int n = 3 + set % 48;
    std::vector<Vec3> pts;
    for (int i = 0; i < n; ++i) pts.emplace_back(u(rng), u(rng), u(rng));
    const MedianResult r = geometric_median(pts, opts);
    worst = std::max(worst, (r.point - oracle::subgradient_median(pts, 200000)).norm());
    for (std::size_t k = 1; k < r.objective_history.size(); ++k) {
      const double rise = (r.objective_history[k] - r.objective_history[k - 1]) / r.objective_history[k - 1];
      worst_rise = std::max(worst_rise, rise);
      monotone = monotone && rise <= 1e-14;
    }
  }
  return verdict(worst <= 1e-6 && monotone, "max distance to oracle " + fmt(worst) + " m, largest relative objective rise " + fmt(worst_rise));
}

Outcome softmax_rejection() {
  const auto p = softmax_probabilities({0.001, 0.002}, 500.0);
  const bool formula = std::abs(p[0] - 0.622) <= 1e-3 && std::abs(p[1] - 0.378) <= 1e-3;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> mm(-0.001, 0.001);
  std::normal_distribution<double> n(0.0, 1.0);
  int rejected = 0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    const Vec3 prev(mm(rng), mm(rng), 0.5);
    std::vector<KeypointCandidate> cands;
    const int good = 1 + t % 5;
    for (int i = 0; i < good; ++i) cands.push_back({0, i, prev + Vec3(mm(rng), mm(rng), mm(rng)), 0.001});
    const Vec3 dir = Vec3(n(rng), n(rng), n(rng)).normalized();
    cands.push_back({0, good, prev + 0.1 * dir, 0.001});
    const Selection s = select_candidates(cands, prev, SelectionConfig{});
    if (std::find(s.accepted.begin(), s.accepted.end(), cands.size() - 1) == s.accepted.end()) ++rejected;
  }
  return verdict(formula && rejected == trials,
                 "p = (" + fmt(p[0]) + ", " + fmt(p[1]) + "), outlier rejected in " + std::to_string(rejected) + "/" + std::to_string(trials));
}

Outcome registration_identity() {
  std::mt19937_64 rng(8);
  double worst_identity = 0.0, worst_translation = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const Pose h0 = random_pose(rng), r0 = random_pose(rng);
    const Registration reg = compute_registration(h0, r0);
    const PoseDistance d = pose_distance(map_palm_pose(reg, h0), r0);
    worst_identity = std::max({worst_identity, d.translation, d.rotation});
    Pose moved = h0;
    const Vec3 delta = 0.1 * random_pose(rng).translation;
    moved.translation += delta;
    const Vec3 robot_delta = map_palm_pose(reg, moved).translation - map_palm_pose(reg, h0).translation;
    worst_translation = std::max(worst_translation, (robot_delta - reg.transform.rotation * delta).norm());
  }
  return verdict(worst_identity <= 1e-12 && worst_translation <= 1e-9,
                 "identity error " + fmt(worst_identity) + ", translation equivariance error " + fmt(worst_translation));
}

Outcome codec_round_trip() {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  auto vec = [&](std::size_t k) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(k));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = u(rng);
    return v;
  };
  int mismatches = 0;
  std::vector<std::string> stream;
  std::vector<HandStateMessage> sent;
  for (int i = 0; i < 10000; ++i) {
    if (i % 2 == 0) {
      HandStateMessage m;
      m.t = std::abs(u(rng)) * 1e4;
      m.reregister = i % 7 == 0;
      if (i % 4 == 0) {
        m.payload = JointPayload{random_pose(rng), vec(kHumanDof)};
      } else {
        KeypointPayload k;
        for (std::size_t p = 0; p < kKeypointCount; ++p) k.keypoints.emplace_back(u(rng), u(rng), u(rng));
        k.candidates.push_back({static_cast<int>(i % 23), i % 3, Vec3(u(rng), u(rng), u(rng)), std::abs(u(rng)) * 0.01});
        m.payload = k;
      }
      const std::string line = encode_message(m);
      if (!(decode_hand_state(line) == m)) ++mismatches;
      if (sent.size() < 40) {
        sent.push_back(m);
        stream.push_back(line);
      }
    } else {
      RobotCommandMessage c;
      c.t_source = std::abs(u(rng));
      c.t_emit = c.t_source + 0.03;
      c.q_a = vec(kRobotDof);
      c.palm_target = random_pose(rng);
      c.diagnostics.cost = std::abs(u(rng));
      c.diagnostics.dropped_frames = static_cast<std::uint64_t>(i);
      c.diagnostics.iterations = i % 50;
      c.diagnostics.converged = i % 3 != 0;
      if (!(decode_robot_command(encode_message(c)) == c)) ++mismatches;
    }
  }
  // cut one line short and make sure only that message is lost
  std::string bytes;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    bytes += i == 17 ? stream[i].substr(0, stream[i].size() / 3) + "\n" : stream[i];
  }
  LineFramer framer;
  for (std::size_t pos = 0; pos < bytes.size(); pos += 97) framer.feed(std::string_view(bytes).substr(pos, 97));
  std::size_t next = 0, malformed = 0;
  bool order_ok = true;
  while (auto line = framer.next_line()) {
    try {
      const HandStateMessage m = decode_hand_state(*line);
      if (next == 17) ++next;
      order_ok = order_ok && next < sent.size() && m == sent[next];
      ++next;
    } catch (const CodecError& e) {
      if (e.code() == CodecErrc::malformed) ++malformed;
      if (next == 17) ++next;
    }
  }
  const bool resync = malformed == 1 && order_ok && next == sent.size();
  return verdict(mismatches == 0 && resync, std::to_string(mismatches) + " round-trip mismatches in 10000, truncated line resynchronized: " +
                                                (resync ? "yes" : "no"));
}

Outcome pipeline_accounting() {
  const auto pinch = lines_of(make_fixture(FixtureKind::pinch_close, *human_model(), {}));
  std::string a, b;
  run_replay(pinch, default_setup(), [&](const std::string& l) { a += l; });
  run_replay(pinch, default_setup(), [&](const std::string& l) { b += l; });
  FixtureOptions fast;
  fast.rate_hz = 60.0;
  fast.frames = 120;
  auto input = lines_of(make_fixture(FixtureKind::random_walk, *human_model(), fast));
  input.insert(input.begin() + 50, "{\"v\":1,\"type\":\"hand_state\"");
  const RunReport r = run_replay(input, default_setup(), [](const std::string&) {});
  const bool ok = a == b && !a.empty() && r.reconciles() && r.dropped > 0 && r.max_queue_depth <= r.queue_capacity;
  return verdict(ok, std::string("replay bytes identical: ") + (a == b ? "yes" : "no") + "; 60->30 Hz run: " + std::to_string(r.inputs) +
                         " inputs = " + std::to_string(r.published) + " published + " + std::to_string(r.dropped) + " dropped + " +
                         std::to_string(r.errors) + " errors");
}

Outcome mlp_inference() {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const MlpWeights w = random_jointnet(seed, 0.2);
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
    for (int t = 0; t < 10; ++t) {
      Eigen::VectorXd x(kJointNetInput);
      for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = u(rng);
      const Eigen::VectorXd y = mlp_forward(w, x);
      worst = std::max(worst, (y - oracle::dense_forward(weights, biases, scales, shifts, relu, x)).lpNorm<Eigen::Infinity>());
    }
  }
  bool contract = false;
  try {
    mlp_forward(random_jointnet(1), Eigen::VectorXd::Zero(68));
  } catch (const DimensionError&) {
    contract = true;
  }
  MlpWeights wrong = random_jointnet(2);
  wrong.layers.back().weight = Eigen::MatrixXd::Zero(16, 256);
  wrong.layers.back().bias = Eigen::VectorXd::Zero(16);
  wrong.output_dim = 16;
  try {
    check_jointnet_contract(wrong);
    contract = false;
  } catch (const DimensionError&) {
  }
  return verdict(worst <= 1e-10 && contract, "max oracle deviation " + fmt(worst) + ", 69->20 contract enforced: " + (contract ? "yes" : "no"));
}

Outcome filter_decay() {
  const double alpha = default_retarget_config().filter_alpha;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd x(16), y(16);
  for (Eigen::Index i = 0; i < 16; ++i) {
    x[i] = u(rng);
    y[i] = u(rng);
  }
  const Eigen::VectorXd e0 = (y - x).cwiseAbs();
  double worst = 0.0;
  for (int k = 1; k <= 100; ++k) {
    y = lowpass_step(y, x, alpha);
    const Eigen::VectorXd expected = std::pow(1.0 - alpha, k) * e0;
    worst = std::max(worst, ((y - x).cwiseAbs() - expected).lpNorm<Eigen::Infinity>());
  }
  return verdict(worst <= 1e-12, "max deviation from (1-alpha)^k decay over 100 steps " + fmt(worst));
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"projection closure (pinch-close)", projection_closure},
      {"S2 separation (two-finger)", s2_separation},
      {"solver optimality and gradient", solver_optimality},
      {"real-time budget", realtime_budget},
      {"FK oracle equivalence", fk_oracle},
      {"geometric median", median_oracle},
      {"softmax rejection", softmax_rejection},
      {"registration identity", registration_identity},
      {"wire codec", codec_round_trip},
      {"pipeline determinism and accounting", pipeline_accounting},
      {"MLP inference", mlp_inference},
      {"filter decay", filter_decay},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failures;
    std::printf("%s %2zu %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failures), criteria.size());
  return failures == 0 ? 0 : 1;
}
