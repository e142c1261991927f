#include "retarget/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <thread>

#include "retarget/fixtures.hpp"
#include "retarget/hashing.hpp"

namespace retarget {

namespace {

using Clock = std::chrono::steady_clock;

double ms_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

/// Shared bookkeeping for both run modes.
struct Tally {
  std::uint64_t inputs = 0;
  std::uint64_t published = 0;
  std::uint64_t dropped = 0;
  std::map<std::string, std::uint64_t> errors;
  std::vector<double> latencies_ms;
  std::vector<double> solve_ms;
  std::optional<double> first_emit;
  double last_emit = 0.0;

  void error(FrameErrc code) { ++errors[std::string(to_string(code))]; }
  void emitted(double t_emit) {
    if (!first_emit) first_emit = t_emit;
    last_emit = t_emit;
    ++published;
  }
};

RunReport make_report(const std::string& mode, const Tally& tally, const PipelineSetup& setup,
                      const FrameProcessor& processor, std::size_t max_depth) {
  RunReport r;
  r.mode = mode;
  r.inputs = tally.inputs;
  r.published = tally.published;
  r.dropped = tally.dropped;
  for (const char* kind : {"decode", "timestamp", "mapping", "solve"}) r.errors_by_kind[kind] = 0;
  for (const auto& [kind, count] : tally.errors) {
    r.errors_by_kind[kind] = count;
    r.errors += count;
  }
  r.latency = latency_stats(tally.latencies_ms);
  if (tally.published >= 2 && tally.last_emit > *tally.first_emit) {
    r.achieved_rate_hz = static_cast<double>(tally.published - 1) / (tally.last_emit - *tally.first_emit);
  }
  if (!tally.solve_ms.empty()) {
    double total = 0.0;
    for (double v : tally.solve_ms) total += v;
    r.mean_solve_ms = total / static_cast<double>(tally.solve_ms.size());
    r.max_solve_ms = *std::max_element(tally.solve_ms.begin(), tally.solve_ms.end());
  }
  r.max_queue_depth = max_depth;
  r.queue_capacity = setup.config.pipeline.queue_capacity;
  r.human_model_hash = model_hash(*setup.human);
  r.robot_model_hash = model_hash(*setup.robot);
  r.config_hash = config_hash(setup.config);
  if (processor.last_command()) r.final_fingertip_distances = fingertip_distances(*setup.robot, *processor.last_command());
  return r;
}

/// Decodes a hand state and enforces strictly increasing timestamps.
std::optional<HandStateMessage> ingest(const std::string& line, std::optional<double>& last_t, Tally& tally) {
  ++tally.inputs;
  HandStateMessage msg;
  try {
    msg = decode_hand_state(line);
  } catch (const CodecError&) {
    tally.error(FrameErrc::decode);
    return std::nullopt;
  }
  if (last_t && !(msg.t > *last_t)) {
    tally.error(FrameErrc::timestamp);
    return std::nullopt;
  }
  last_t = msg.t;
  return msg;
}

}  // namespace

nlohmann::ordered_json to_json(const AppConfig& config) {
  nlohmann::ordered_json j;
  j["retarget"] = to_json(config.retarget);
  j["fusion"] = to_json(config.fusion);
  nlohmann::ordered_json p;
  p["rate_hz"] = config.pipeline.rate_hz;
  p["queue_capacity"] = config.pipeline.queue_capacity;
  p["weights_path"] = config.pipeline.weights_path;
  const nlohmann::ordered_json registration = to_json(config.pipeline.registration);
  for (const auto& [key, value] : registration.items()) p[key] = value;
  j["pipeline"] = std::move(p);
  return j;
}

AppConfig app_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  AppConfig c;
  if (const auto it = j.find("retarget"); it != j.end()) c.retarget = retarget_config_from_json(*it);
  if (const auto it = j.find("fusion"); it != j.end()) c.fusion = fusion_config_from_json(*it);
  if (const auto it = j.find("pipeline"); it != j.end()) {
    const nlohmann::json& p = *it;
    if (!p.is_object()) throw std::invalid_argument("pipeline config must be a JSON object");
    try {
      if (p.contains("rate_hz")) c.pipeline.rate_hz = p.at("rate_hz").get<double>();
      if (p.contains("queue_capacity")) c.pipeline.queue_capacity = p.at("queue_capacity").get<std::size_t>();
      if (p.contains("weights_path")) c.pipeline.weights_path = p.at("weights_path").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument(std::string("invalid pipeline config: ") + e.what());
    }
    c.pipeline.registration = registration_config_from_json(p);
  }
  if (!(c.pipeline.rate_hz > 0.0) || !std::isfinite(c.pipeline.rate_hz)) {
    throw std::invalid_argument("pipeline.rate_hz must be positive");
  }
  if (c.pipeline.queue_capacity == 0) throw std::invalid_argument("pipeline.queue_capacity must be positive");
  return c;
}

AppConfig load_app_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return app_config_from_json(j);
}

std::string config_hash(const AppConfig& config) { return sha256_hex(to_json(config).dump()); }

std::string model_hash(const HandModel& model) { return sha256_hex(serialize_model(model)); }

std::string_view to_string(FrameErrc code) {
  switch (code) {
    case FrameErrc::decode: return "decode";
    case FrameErrc::timestamp: return "timestamp";
    case FrameErrc::mapping: return "mapping";
    case FrameErrc::solve: return "solve";
  }
  return "decode";
}

PipelineSetup PipelineSetup::load(std::shared_ptr<const HandModel> human, std::shared_ptr<const HandModel> robot,
                                  AppConfig config) {
  PipelineSetup setup{std::move(human), std::move(robot), std::move(config), std::nullopt};
  if (!setup.config.pipeline.weights_path.empty()) {
    setup.jointnet = load_mlp_weights(setup.config.pipeline.weights_path);
  }
  return setup;
}

FrameProcessor::FrameProcessor(const PipelineSetup& setup)
    : human_(setup.human), jointnet_(setup.jointnet), registration_config_(setup.config.pipeline.registration),
      retargeter_(setup.human, setup.robot, setup.config.retarget), fuser_(setup.config.fusion) {
  if (jointnet_) {
    check_jointnet_contract(*jointnet_);
    check_dimension("keypoint network output", human_->dof(), static_cast<std::size_t>(jointnet_->output_dim));
  }
}

RobotCommandMessage FrameProcessor::process(const HandStateMessage& msg, double t_emit, std::uint64_t dropped_so_far) {
  JointVector q_h{human_->name(), Eigen::VectorXd()};
  Pose palm;
  if (const auto* joints = std::get_if<JointPayload>(&msg.payload)) {
    if (static_cast<std::size_t>(joints->q_h.size()) != human_->dof()) {
      throw FrameError(FrameErrc::mapping, "hand state joint count does not match the human model");
    }
    q_h.values = joints->q_h;
    palm = joints->palm_pose;
  } else {
    if (!jointnet_) throw FrameError(FrameErrc::mapping, "keypoint payload received without a keypoint network");
    const auto& payload = std::get<KeypointPayload>(msg.payload);
    try {
      const std::vector<Vec3> fused = fuser_.update(payload);
      const Pose keypoint_frame = frame_from_palm_keypoints(fused[kPalmKeypoints[0]], fused[kPalmKeypoints[1]],
                                                            fused[kPalmKeypoints[2]]);
      const Eigen::VectorXd raw = mlp_forward(*jointnet_, keypoint_features(fused, keypoint_frame));
      q_h.values = raw.cwiseMax(human_->lower_limits()).cwiseMin(human_->upper_limits());
      palm = keypoint_frame * palm_keypoint_frame().inverse();
    } catch (const std::invalid_argument& e) {
      throw FrameError(FrameErrc::mapping, e.what());
    }
  }

  if (!registration_ || msg.reregister) {
    try {
      registration_ = compute_registration(palm, registration_config_.robot_initial);
    } catch (const std::invalid_argument& e) {
      throw FrameError(FrameErrc::mapping, e.what());
    }
  }

  StepOutput step;
  try {
    step = retargeter_.step(q_h, state_);
  } catch (const std::domain_error& e) {
    throw FrameError(FrameErrc::solve, e.what());
  }
  if (!step.filtered.values.allFinite()) throw FrameError(FrameErrc::solve, "non-finite filtered command");

  RobotCommandMessage cmd;
  cmd.t_source = msg.t;
  cmd.t_emit = t_emit;
  cmd.q_a = step.filtered.values;
  cmd.palm_target = map_palm_pose(*registration_, palm);
  cmd.diagnostics.cost = step.diagnostics.cost;
  cmd.diagnostics.solve_ms = step.diagnostics.solve_ms;
  cmd.diagnostics.dropped_frames = dropped_so_far;
  cmd.diagnostics.iterations = step.diagnostics.iterations;
  cmd.diagnostics.converged = step.diagnostics.converged;
  cmd.diagnostics.in_workspace =
      validate_workspace(cmd.palm_target, registration_config_.workspace) == WorkspaceStatus::ok;
  last_q_ = cmd.q_a;
  return cmd;
}

std::map<std::string, double> fingertip_distances(const HandModel& robot, const Eigen::VectorXd& q) {
  const KinematicState fk = compute_kinematics(robot, q);
  std::map<std::string, double> out;
  const auto& fingers = robot.fingers();
  for (std::size_t a = 0; a < fingers.size(); ++a) {
    for (std::size_t b = a + 1; b < fingers.size(); ++b) {
      const Vec3 pa = fk.frame_pose(robot, robot.require_frame(fingers[a].tip_frame)).translation;
      const Vec3 pb = fk.frame_pose(robot, robot.require_frame(fingers[b].tip_frame)).translation;
      out[fingers[a].name + "-" + fingers[b].name] = (pa - pb).norm();
    }
  }
  return out;
}

LatencyStats latency_stats(std::vector<double> samples_ms) {
  LatencyStats s;
  if (samples_ms.empty()) return s;
  std::sort(samples_ms.begin(), samples_ms.end());
  auto rank = [&](double p) {
    const auto n = static_cast<double>(samples_ms.size());
    const auto k = static_cast<std::size_t>(std::max(1.0, std::ceil(p * n)));
    return samples_ms[std::min(k, samples_ms.size()) - 1];
  };
  s.p50_ms = rank(0.50);
  s.p95_ms = rank(0.95);
  s.max_ms = samples_ms.back();
  return s;
}

nlohmann::ordered_json to_json(const RunReport& r) {
  nlohmann::ordered_json j;
  j["mode"] = r.mode;
  j["inputs"] = r.inputs;
  j["published"] = r.published;
  j["dropped"] = r.dropped;
  j["errors"] = r.errors;
  j["errors_by_kind"] = r.errors_by_kind;
  j["latency_ms"] = {{"p50", r.latency.p50_ms}, {"p95", r.latency.p95_ms}, {"max", r.latency.max_ms}};
  j["achieved_rate_hz"] = r.achieved_rate_hz;
  j["solve_ms"] = {{"mean", r.mean_solve_ms}, {"max", r.max_solve_ms}};
  j["max_queue_depth"] = r.max_queue_depth;
  j["queue_capacity"] = r.queue_capacity;
  j["hashes"] = {{"human_model", r.human_model_hash}, {"robot_model", r.robot_model_hash}, {"config", r.config_hash}};
  j["final_fingertip_distances_m"] = r.final_fingertip_distances;
  return j;
}

RunReport run_replay(const std::vector<std::string>& lines, const PipelineSetup& setup, const LineSink& sink) {
  FrameProcessor processor(setup);
  Tally tally;
  std::optional<double> last_t;
  std::vector<HandStateMessage> frames;
  for (const std::string& line : lines) {
    if (auto msg = ingest(line, last_t, tally)) frames.push_back(std::move(*msg));
  }

  const double rate = setup.config.pipeline.rate_hz;
  BoundedQueue<HandStateMessage> queue(setup.config.pipeline.queue_capacity);
  std::size_t next = 0;
  const double t0 = frames.empty() ? 0.0 : frames.front().t;
  std::uint64_t tick = 0;
  while (next < frames.size() || queue.size() > 0) {
    const double now = t0 + static_cast<double>(tick) / rate;
    while (next < frames.size() && frames[next].t <= now) {
      tally.dropped += queue.push(frames[next]);
      ++next;
    }
    if (auto msg = queue.try_pop()) {
      try {
        RobotCommandMessage cmd = processor.process(*msg, now, tally.dropped);
        tally.solve_ms.push_back(cmd.diagnostics.solve_ms);
        cmd.diagnostics.solve_ms = 0.0;
        sink(encode_message(cmd));
        tally.latencies_ms.push_back(1000.0 * (now - msg->t));
        tally.emitted(now);
      } catch (const FrameError& e) {
        tally.error(e.code());
      }
    } else if (next < frames.size()) {
      // idle: jump to the first tick at or after the next arrival
      auto target = static_cast<std::uint64_t>(std::max(0.0, std::floor((frames[next].t - t0) * rate)));
      while (t0 + static_cast<double>(target) / rate < frames[next].t) ++target;
      tick = std::max(tick + 1, target);
      continue;
    }
    ++tick;
  }
  return make_report("replay", tally, setup, processor, queue.high_water());
}

RunReport run_live(const LineSource& source, const PipelineSetup& setup, const LineSink& sink,
                   const std::atomic<bool>& stop) {
  struct Arrival {
    HandStateMessage msg;
    Clock::time_point arrived;
  };
  struct Outgoing {
    std::string line;
    Clock::time_point arrived;
  };

  FrameProcessor processor(setup);
  const std::size_t capacity = setup.config.pipeline.queue_capacity;
  BoundedQueue<Arrival> inbox(capacity);
  BoundedQueue<Outgoing> outbox(capacity);
  std::mutex tally_mutex;
  Tally tally;
  std::atomic<bool> sink_failed{false};
  const Clock::time_point start = Clock::now();
  const auto period = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(1.0 / setup.config.pipeline.rate_hz));

  std::thread ingest_thread([&] {
    std::optional<double> last_t;
    std::string line;
    while (!stop.load() && !sink_failed.load()) {
      const ReadStatus status = source(line);
      if (status == ReadStatus::closed) break;
      if (status == ReadStatus::timeout) continue;
      const Clock::time_point arrived = Clock::now();
      std::optional<HandStateMessage> msg;
      {
        std::lock_guard lock(tally_mutex);
        msg = ingest(line, last_t, tally);
      }
      if (!msg) continue;
      const std::size_t evicted = inbox.push({std::move(*msg), arrived});
      std::lock_guard lock(tally_mutex);
      tally.dropped += evicted;
    }
    inbox.close();
  });

  std::thread solve_thread([&] {
    Clock::time_point next_tick = Clock::now();
    while (!inbox.drained()) {
      std::this_thread::sleep_until(next_tick);
      next_tick += period;
      std::optional<Arrival> item = inbox.try_pop();
      if (!item) continue;
      const double t_emit = std::chrono::duration<double>(Clock::now() - start).count();
      std::uint64_t dropped;
      {
        std::lock_guard lock(tally_mutex);
        dropped = tally.dropped;
      }
      try {
        const RobotCommandMessage cmd = processor.process(item->msg, t_emit, dropped);
        const std::size_t evicted = outbox.push({encode_message(cmd), item->arrived});
        std::lock_guard lock(tally_mutex);
        tally.solve_ms.push_back(cmd.diagnostics.solve_ms);
        tally.dropped += evicted;
      } catch (const FrameError& e) {
        std::lock_guard lock(tally_mutex);
        tally.error(e.code());
      }
    }
    outbox.close();
  });

  std::thread publish_thread([&] {
    while (!outbox.drained()) {
      std::optional<Outgoing> out = outbox.pop_wait(std::chrono::milliseconds(50));
      if (!out) continue;
      bool delivered = true;
      if (!sink_failed.load()) {
        try {
          sink(out->line);
        } catch (const std::exception&) {
          sink_failed.store(true);
          delivered = false;
        }
      } else {
        delivered = false;
      }
      const Clock::time_point now = Clock::now();
      std::lock_guard lock(tally_mutex);
      if (delivered) {
        tally.latencies_ms.push_back(ms_between(out->arrived, now));
        tally.emitted(std::chrono::duration<double>(now - start).count());
      } else {
        ++tally.dropped;
      }
    }
  });

  ingest_thread.join();
  solve_thread.join();
  publish_thread.join();
  return make_report("live", tally, setup, processor, std::max(inbox.high_water(), outbox.high_water()));
}

}  // namespace retarget
