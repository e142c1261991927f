#include "cli/cli.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <random>
#include <thread>

#include <CLI11.hpp>

#include "cli/config_flags.hpp"
#include "cli/io.hpp"
#include "cli/net.hpp"
#include "retarget/errors.hpp"
#include "retarget/fixtures.hpp"
#include "retarget/hashing.hpp"

namespace retarget::cli {

namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::ordered_json;

constexpr auto kPollInterval = std::chrono::milliseconds(100);
constexpr auto kHandshakeTimeout = std::chrono::seconds(5);

std::string default_model(const char* file) { return std::string(RETARGET_DATA_DIR) + "/models/" + file; }

/// Model paths plus the mirrored config keys, shared by every subcommand that builds a pipeline.
struct SetupOptions {
  std::string human = default_model("human_hand.json");
  std::string robot = default_model("robot_hand.json");
  std::string config;
  ConfigFlags flags;

  void add_to(CLI::App& app) {
    app.add_option("--human", human, "human hand model file")->capture_default_str();
    app.add_option("--robot", robot, "robot hand model file")->capture_default_str();
    app.add_option("--config", config, "application config JSON (see config-init)");
    flags.add_to(app);
  }

  PipelineSetup load() const {
    PipelineSetup setup{read_model(human), read_model(robot), flags.resolve(config), std::nullopt};
    const std::string& weights = setup.config.pipeline.weights_path;
    if (!weights.empty()) {
      const std::string text = read_text(weights);
      try {
        setup.jointnet = parse_mlp_weights(text);
        check_jointnet_contract(*setup.jointnet);
      } catch (const nlohmann::json::exception& e) {
        throw CliError(ExitCode::parse, "weights '" + weights + "': " + e.what());
      } catch (const DimensionError& e) {
        throw CliError(ExitCode::invalid_input, "weights '" + weights + "': " + e.what());
      } catch (const std::invalid_argument& e) {
        throw CliError(ExitCode::parse, "weights '" + weights + "': " + e.what());
      }
    }
    try {
      Retargeter probe(setup.human, setup.robot, setup.config.retarget);
    } catch (const std::invalid_argument& e) {
      throw CliError(ExitCode::invalid_input, std::string("config does not fit the models: ") + e.what());
    }
    return setup;
  }
};

Handshake local_handshake(const PipelineSetup& setup) {
  return {kSchemaVersion, model_hash(*setup.human), model_hash(*setup.robot), config_hash(setup.config)};
}

// ---------------------------------------------------------------------------
// replay

struct ReplayOptions {
  SetupOptions setup;
  std::string input;
  std::string output = "-";
  std::string report;
};

int cmd_replay(const ReplayOptions& o, std::ostream& out, std::ostream& err) {
  const PipelineSetup setup = o.setup.load();
  const std::vector<std::string> lines = split_lines(read_text(o.input));
  std::string commands;
  const RunReport report = run_replay(lines, setup, [&](const std::string& line) { commands += line; });
  if (o.output == "-") {
    out << commands;
  } else {
    write_text(o.output, commands);
  }
  const std::string report_text = to_json(report).dump(2) + "\n";
  if (!o.report.empty()) write_text(o.report, report_text);
  (o.output == "-" ? err : out) << report_text;
  return 0;
}

// ---------------------------------------------------------------------------
// serve

struct ServeOptions {
  SetupOptions setup;
  std::string host = "127.0.0.1";
  std::uint16_t port = 7000;
  std::string port_file;
  std::string output;
  bool once = false;
};

/// Reads one newline-terminated line, observing the stop flag. Empty on timeout or end of stream.
std::optional<std::string> read_line(const Socket& s, LineFramer& framer, Clock::time_point deadline) {
  char buffer[4096];
  while (Clock::now() < deadline && !stop_flag().load()) {
    if (auto line = framer.next_line()) return line;
    if (wait_readable(s, kPollInterval) == Readiness::timeout) continue;
    const std::size_t n = read_some(s, buffer, sizeof buffer);
    if (n == 0) return std::nullopt;
    framer.feed(std::string_view(buffer, n));
  }
  return framer.next_line();
}

std::string handshake_mismatch(const Handshake& got, const Handshake& want) {
  if (got.schema_version != want.schema_version) {
    return "schema version " + std::to_string(got.schema_version) + " is not supported (server speaks " +
           std::to_string(want.schema_version) + ")";
  }
  std::string reason;
  auto check = [&](const std::string& a, const std::string& b, const char* what) {
    if (a != b) reason += std::string(reason.empty() ? "" : "; ") + what + " hash differs";
  };
  check(got.human_model_hash, want.human_model_hash, "human model");
  check(got.robot_model_hash, want.robot_model_hash, "robot model");
  check(got.config_hash, want.config_hash, "config");
  return reason;
}

enum class SessionResult { completed, rejected };

SessionResult serve_session(Socket client, const PipelineSetup& setup, const ServeOptions& o, RunReport& report,
                            std::ostream& err) {
  LineFramer framer;
  const std::optional<std::string> first = read_line(client, framer, Clock::now() + kHandshakeTimeout);
  HandshakeReply reply;
  if (!first) {
    reply.reason = "no handshake received";
  } else {
    try {
      const WireMessage msg = decode_message(*first);
      if (const auto* h = std::get_if<Handshake>(&msg)) {
        reply.reason = handshake_mismatch(*h, local_handshake(setup));
      } else {
        reply.reason = "expected a handshake line";
      }
    } catch (const CodecError& e) {
      reply.reason = std::string("unreadable handshake: ") + e.what();
    }
  }
  reply.accepted = reply.reason.empty();
  try {
    write_all(client, encode_message(reply));
  } catch (const NetworkError&) {
  }
  if (!reply.accepted) {
    err << "handshake rejected: " << reply.reason << "\n";
    return SessionResult::rejected;
  }

  std::ofstream record;
  if (!o.output.empty()) {
    record.open(o.output, std::ios::binary | std::ios::trunc);
    if (!record) throw CliError(ExitCode::io, "cannot open '" + o.output + "' for writing");
  }
  bool eof = false;
  const LineSource source = [&](std::string& line) {
    if (auto l = framer.next_line()) {
      line = std::move(*l);
      return ReadStatus::line;
    }
    if (eof) {
      line = framer.take_remainder();
      return line.empty() ? ReadStatus::closed : ReadStatus::line;
    }
    if (wait_readable(client, kPollInterval) == Readiness::timeout) return ReadStatus::timeout;
    char buffer[65536];
    const std::size_t n = read_some(client, buffer, sizeof buffer);
    if (n == 0) {
      eof = true;
    } else {
      framer.feed(std::string_view(buffer, n));
    }
    return ReadStatus::timeout;
  };
  const LineSink sink = [&](const std::string& line) {
    if (record.is_open()) record << line;
    write_all(client, line);
  };
  report = run_live(source, setup, sink, stop_flag());
  shutdown_write(client);
  return SessionResult::completed;
}

int cmd_serve(const ServeOptions& o, std::ostream& out, std::ostream& err) {
  const PipelineSetup setup = o.setup.load();
  Socket listener = listen_tcp(o.host, o.port);
  const std::uint16_t port = local_port(listener);
  if (!o.port_file.empty()) write_text(o.port_file, std::to_string(port) + "\n");
  err << "listening on " << o.host << ":" << port << "\n";

  std::size_t sessions = 0;
  while (!stop_flag().load()) {
    Socket client = accept_client(listener, kPollInterval);
    if (!client.valid()) continue;
    RunReport report;
    const SessionResult result = serve_session(std::move(client), setup, o, report, err);
    if (result == SessionResult::rejected) {
      if (o.once) return static_cast<int>(ExitCode::handshake);
      continue;
    }
    ++sessions;
    out << to_json(report).dump() << "\n" << std::flush;
    if (o.once) break;
  }
  if (sessions == 0) {
    RunReport empty;
    empty.mode = "live";
    empty.queue_capacity = setup.config.pipeline.queue_capacity;
    for (FrameErrc kind : {FrameErrc::decode, FrameErrc::timestamp, FrameErrc::mapping, FrameErrc::solve}) {
      empty.errors_by_kind[std::string(to_string(kind))] = 0;
    }
    empty.human_model_hash = model_hash(*setup.human);
    empty.robot_model_hash = model_hash(*setup.robot);
    empty.config_hash = config_hash(setup.config);
    out << to_json(empty).dump() << "\n";
  }
  err << "server stopped after " << sessions << " session(s)\n";
  return 0;
}

// ---------------------------------------------------------------------------
// send

struct SendOptions {
  SetupOptions setup;
  std::string host = "127.0.0.1";
  std::uint16_t port = 7000;
  std::string input;
  std::string output;
  bool realtime = false;
  int schema_version = kSchemaVersion;
};

int cmd_send(const SendOptions& o, std::ostream& out, std::ostream& err) {
  const PipelineSetup setup = o.setup.load();
  std::vector<std::string> lines = split_lines(read_text(o.input));
  Socket s = connect_tcp(o.host, o.port);
  Handshake h = local_handshake(setup);
  h.schema_version = o.schema_version;
  write_all(s, encode_message(h));

  LineFramer framer;
  const std::optional<std::string> reply_line = read_line(s, framer, Clock::now() + kHandshakeTimeout);
  if (!reply_line) throw CliError(ExitCode::network, "server closed the connection without a handshake reply");
  HandshakeReply reply;
  try {
    const WireMessage msg = decode_message(*reply_line);
    if (!std::holds_alternative<HandshakeReply>(msg)) throw CliError(ExitCode::network, "server did not reply with a handshake");
    reply = std::get<HandshakeReply>(msg);
  } catch (const CodecError& e) {
    throw CliError(ExitCode::network, std::string("unreadable handshake reply: ") + e.what());
  }
  if (!reply.accepted) throw CliError(ExitCode::handshake, "handshake rejected: " + reply.reason);

  std::exception_ptr writer_error;
  std::thread writer([&] {
    try {
      std::optional<double> t0;
      const Clock::time_point start = Clock::now();
      for (std::string& line : lines) {
        if (o.realtime) {
          try {
            const double t = decode_hand_state(line).t;
            if (!t0) t0 = t;
            std::this_thread::sleep_until(start + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(t - *t0)));
          } catch (const CodecError&) {
          }
        }
        line += '\n';
        write_all(s, line);
      }
    } catch (...) {
      writer_error = std::current_exception();
    }
    shutdown_write(s);
  });

  std::string received;
  std::size_t count = 0;
  while (auto line = read_line(s, framer, Clock::time_point::max())) {
    received += *line + "\n";
    ++count;
  }
  writer.join();
  if (writer_error) std::rethrow_exception(writer_error);
  if (!o.output.empty()) write_text(o.output, received);
  out << ordered_json{{"sent", lines.size()}, {"received", count}}.dump() << "\n";
  (void)err;
  return 0;
}

// ---------------------------------------------------------------------------
// fk

struct FkOptions {
  std::string model = default_model("robot_hand.json");
  std::vector<double> q;
};

int cmd_fk(const FkOptions& o, std::ostream& out) {
  const auto model = read_model(o.model);
  JointVector q = JointVector::zeros(*model);
  if (!o.q.empty() || model->dof() == 0) q.values = Eigen::Map<const Eigen::VectorXd>(o.q.data(), static_cast<Eigen::Index>(o.q.size()));
  const auto poses = forward_kinematics(*model, q);
  ordered_json frames = ordered_json::object();
  for (const auto& [name, pose] : poses) frames[name] = pose_json(pose);
  out << ordered_json{{"model", model->name()}, {"frames", frames}}.dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// bench

struct BenchCommand {
  SetupOptions setup;
  BenchOptions bench;
  bool enforce = false;
};

int cmd_bench(const BenchCommand& o, std::ostream& out) {
  const BenchResult result = run_bench(o.setup.load(), o.bench);
  out << to_json(result).dump(2) << "\n";
  if (o.enforce && !result.within_budget()) return static_cast<int>(ExitCode::budget);
  return 0;
}

// ---------------------------------------------------------------------------
// export

struct ExportOptions {
  std::string robot = default_model("robot_hand.json");
  std::string input;
  std::string csv;
  std::string scene;
};

int cmd_export(const ExportOptions& o, std::ostream& out) {
  const auto robot = read_model(o.robot);
  const std::vector<std::string> lines = split_lines(read_text(o.input));
  std::vector<RobotCommandMessage> commands;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      commands.push_back(decode_robot_command(lines[i]));
    } catch (const CodecError& e) {
      throw CliError(ExitCode::parse, "line " + std::to_string(i + 1) + ": " + e.what());
    }
    if (static_cast<std::size_t>(commands.back().q_a.size()) != robot->dof()) {
      throw CliError(ExitCode::invalid_input, "line " + std::to_string(i + 1) + ": command does not fit the robot model");
    }
  }

  const std::vector<std::string> joints = robot->dof_names();
  std::string csv = "frame,t_source,t_emit,joint,value\n";
  for (std::size_t f = 0; f < commands.size(); ++f) {
    const RobotCommandMessage& c = commands[f];
    const std::string prefix =
        std::to_string(f) + "," + format_double(c.t_source) + "," + format_double(c.t_emit) + ",";
    for (std::size_t j = 0; j < joints.size(); ++j) {
      csv += prefix + joints[j] + "," + format_double(c.q_a[static_cast<Eigen::Index>(j)]) + "\n";
    }
  }
  if (!o.csv.empty()) {
    write_text(o.csv, csv);
  } else {
    out << csv;
  }

  if (!o.scene.empty()) {
    ordered_json frames = ordered_json::array();
    for (std::size_t f = 0; f < commands.size(); ++f) {
      const RobotCommandMessage& c = commands[f];
      const KinematicState fk = compute_kinematics(*robot, c.q_a);
      ordered_json tips = ordered_json::object();
      for (const FingerSpec& finger : robot->fingers()) {
        const Vec3 p = c.palm_target * fk.frame_pose(*robot, robot->require_frame(finger.tip_frame)).translation;
        tips[finger.tip_frame] = {p.x(), p.y(), p.z()};
      }
      frames.push_back(ordered_json{{"frame", f},
                                    {"t_source", c.t_source},
                                    {"t_emit", c.t_emit},
                                    {"palm_target", pose_json(c.palm_target)},
                                    {"fingertips", tips}});
    }
    const ordered_json scene{{"model", robot->name()}, {"coordinates", "robot_base"}, {"units", "m"}, {"frames", frames}};
    write_text(o.scene, scene.dump(2) + "\n");
  }
  return 0;
}

// ---------------------------------------------------------------------------
// fixtures

struct FixturesCommand {
  std::string human = default_model("human_hand.json");
  std::string kind;
  bool all = false;
  std::string output;
  std::string dir = ".";
  FixtureOptions options;
  double start_z = 0.5;
  std::string weights_out;
  std::uint64_t weights_seed = 1;
};

int cmd_fixtures(const FixturesCommand& o, std::ostream& out) {
  const auto human = read_model(o.human);
  FixtureOptions options = o.options;
  options.palm_start = Pose::from_translation(Vec3(0.0, 0.0, o.start_z));
  std::vector<FixtureKind> kinds;
  if (o.all) {
    kinds = {FixtureKind::open_hand, FixtureKind::pinch_close, FixtureKind::two_finger, FixtureKind::random_walk};
  } else if (!o.kind.empty()) {
    try {
      kinds = {fixture_kind_from_string(o.kind)};
    } catch (const std::invalid_argument& e) {
      throw CliError(ExitCode::usage, e.what());
    }
  }
  if (kinds.empty() && o.weights_out.empty()) throw CliError(ExitCode::usage, "nothing to generate: pass --kind, --all or --weights-out");
  if (!o.all && !kinds.empty() && o.output.empty()) throw CliError(ExitCode::usage, "--kind needs --output");

  ordered_json written = ordered_json::array();
  for (FixtureKind kind : kinds) {
    const std::string path = o.all ? o.dir + "/" + std::string(to_string(kind)) + ".jsonl" : o.output;
    const auto messages = make_fixture(kind, *human, options);
    write_text(path, to_jsonl(messages));
    written.push_back(ordered_json{{"kind", to_string(kind)}, {"path", path}, {"frames", messages.size()}});
  }
  if (!o.weights_out.empty()) {
    write_text(o.weights_out, serialize_mlp_weights(random_jointnet(o.weights_seed)));
    written.push_back(ordered_json{{"kind", "jointnet-weights"}, {"path", o.weights_out}});
  }
  out << written.dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// config-init

struct ConfigInitOptions {
  std::string config;
  ConfigFlags flags;
  std::string output;
};

int cmd_config_init(const ConfigInitOptions& o, std::ostream& out) {
  const std::string text = to_json(o.flags.resolve(o.config)).dump(2) + "\n";
  if (o.output.empty()) {
    out << text;
  } else {
    write_text(o.output, text);
  }
  return 0;
}

int exit_for(const std::exception& e, std::ostream& err, ExitCode code) {
  err << "error: " << e.what() << "\n";
  return static_cast<int>(code);
}

}  // namespace

std::atomic<bool>& stop_flag() {
  static std::atomic<bool> flag{false};
  return flag;
}

BenchResult run_bench(const PipelineSetup& setup, const BenchOptions& options) {
  if (options.window == 0) throw std::invalid_argument("bench window must be positive");
  RetargetConfig config = setup.config.retarget;
  if (options.vectors > 0) {
    if (options.vectors > config.vector_specs.size()) {
      throw std::invalid_argument("bench asks for " + std::to_string(options.vectors) + " task vectors but the config has " +
                                  std::to_string(config.vector_specs.size()));
    }
    config.vector_specs.resize(options.vectors);
  }
  const Retargeter retargeter(setup.human, setup.robot, config);
  const HandModel& human = *setup.human;
  const Eigen::VectorXd lo = human.lower_limits();
  const Eigen::VectorXd hi = human.upper_limits();

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd q = lo + (hi - lo).cwiseProduct(Eigen::VectorXd::NullaryExpr(lo.size(), [&] { return uniform(rng); }));

  BenchResult result;
  result.options = options;
  result.vectors = config.vector_specs.size();
  std::vector<double> times;
  SolveState state;
  const Clock::time_point start = Clock::now();
  for (std::size_t i = 0; i < options.frames; ++i) {
    if (options.duration_s > 0.0 && std::chrono::duration<double>(Clock::now() - start).count() >= options.duration_s) break;
    if (i > 0) {
      q += 0.05 * Eigen::VectorXd::NullaryExpr(q.size(), [&] { return normal(rng); });
      q = q.cwiseMax(lo).cwiseMin(hi);
    }
    const StepOutput step = retargeter.step(JointVector{human.name(), q}, state);
    times.push_back(step.diagnostics.solve_ms);
    result.total_iterations += static_cast<std::uint64_t>(step.diagnostics.iterations);
    if (step.diagnostics.converged) ++result.converged;
    result.checksum += step.filtered.values.sum();
  }

  auto summarize = [](std::vector<double> samples) {
    BenchStats s;
    s.frames = samples.size();
    if (samples.empty()) return s;
    double total = 0.0;
    for (double v : samples) total += v;
    s.mean_ms = total / static_cast<double>(samples.size());
    const LatencyStats l = latency_stats(std::move(samples));
    s.p95_ms = l.p95_ms;
    s.max_ms = l.max_ms;
    return s;
  };
  result.overall = summarize(times);
  for (std::size_t first = 0; first < times.size(); first += options.window) {
    const std::size_t last = std::min(times.size(), first + options.window);
    result.rows.push_back(summarize({times.begin() + static_cast<std::ptrdiff_t>(first), times.begin() + static_cast<std::ptrdiff_t>(last)}));
  }
  return result;
}

nlohmann::ordered_json to_json(const BenchResult& r) {
  ordered_json rows = ordered_json::array();
  std::size_t first = 0;
  for (const BenchStats& s : r.rows) {
    rows.push_back(ordered_json{{"first_frame", first}, {"frames", s.frames}, {"mean_ms", s.mean_ms}, {"p95_ms", s.p95_ms}, {"max_ms", s.max_ms}});
    first += s.frames;
  }
  return ordered_json{
      {"workload",
       {{"seed", r.options.seed},
        {"frames", r.overall.frames},
        {"vectors", r.vectors},
        {"total_iterations", r.total_iterations},
        {"converged", r.converged},
        {"checksum", r.checksum}}},
      {"timing", {{"mean_ms", r.overall.mean_ms}, {"p95_ms", r.overall.p95_ms}, {"max_ms", r.overall.max_ms}, {"rows", rows}}},
      {"budget",
       {{"mean_ms", r.options.budget_mean_ms}, {"p95_ms", r.options.budget_p95_ms}, {"within_budget", r.within_budget()}}}};
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Kinematic hand retargeting: human hand states to robot hand commands", "retarget-cli");
  app.require_subcommand(1);
  app.set_version_flag("--version", "retarget-cli 1.0");

  ReplayOptions replay;
  CLI::App* replay_cmd = app.add_subcommand("replay", "Run a trajectory file through the pipeline deterministically");
  replay_cmd->add_option("--input,-i", replay.input, "hand-state .jsonl file ('-' for stdin)")->required();
  replay_cmd->add_option("--output,-o", replay.output, "robot-command .jsonl output ('-' for stdout)")->capture_default_str();
  replay_cmd->add_option("--report", replay.report, "also write the run report JSON here");
  replay.setup.add_to(*replay_cmd);

  ServeOptions serve;
  CLI::App* serve_cmd = app.add_subcommand("serve", "Accept hand-state streams over TCP and answer with robot commands");
  serve_cmd->add_option("--host", serve.host, "listen address")->capture_default_str();
  serve_cmd->add_option("--port", serve.port, "listen port (0 picks a free port)")->capture_default_str();
  serve_cmd->add_option("--port-file", serve.port_file, "write the bound port to this file");
  serve_cmd->add_option("--output,-o", serve.output, "also record published commands to this file");
  serve_cmd->add_flag("--once", serve.once, "exit after the first client session");
  serve.setup.add_to(*serve_cmd);

  SendOptions send;
  CLI::App* send_cmd = app.add_subcommand("send", "Stream a trajectory file to a server and collect its commands");
  send_cmd->add_option("--host", send.host, "server address")->capture_default_str();
  send_cmd->add_option("--port", send.port, "server port")->capture_default_str();
  send_cmd->add_option("--input,-i", send.input, "hand-state .jsonl file ('-' for stdin)")->required();
  send_cmd->add_option("--output,-o", send.output, "write received commands here");
  send_cmd->add_flag("--realtime", send.realtime, "pace frames by their timestamps instead of sending at once");
  send_cmd->add_option("--schema-version", send.schema_version, "schema version to announce (diagnostics)")->capture_default_str();
  send.setup.add_to(*send_cmd);

  FkOptions fk;
  CLI::App* fk_cmd = app.add_subcommand("fk", "Print the pose of every named frame of a model as JSON");
  fk_cmd->add_option("--model,-m", fk.model, "model file")->capture_default_str();
  fk_cmd->add_option("--q", fk.q, "comma-separated joint values in model order (default: zeros)")->delimiter(',');

  BenchCommand bench;
  CLI::App* bench_cmd = app.add_subcommand("bench", "Time the solver on a seeded random stream of human configurations");
  bench_cmd->add_option("--frames", bench.bench.frames, "number of solves")->capture_default_str();
  bench_cmd->add_option("--duration", bench.bench.duration_s, "wall-clock cap in seconds (0: none)")->capture_default_str();
  bench_cmd->add_option("--seed", bench.bench.seed, "random seed")->capture_default_str();
  bench_cmd->add_option("--vectors", bench.bench.vectors, "use only the first N task vectors (0: all)")->capture_default_str();
  bench_cmd->add_option("--window", bench.bench.window, "solves per statistics row")->capture_default_str();
  bench_cmd->add_flag("--enforce-budget", bench.enforce, "exit with the budget code when the budget is missed");
  bench.setup.add_to(*bench_cmd);

  ExportOptions exp;
  CLI::App* export_cmd = app.add_subcommand("export", "Convert a robot-command .jsonl file to a joint CSV and a scene JSON");
  export_cmd->add_option("--input,-i", exp.input, "robot-command .jsonl file")->required();
  export_cmd->add_option("--csv", exp.csv, "joint time series CSV (default: stdout)");
  export_cmd->add_option("--scene", exp.scene, "per-frame fingertip scene JSON");
  export_cmd->add_option("--robot", exp.robot, "robot hand model file")->capture_default_str();

  FixturesCommand fixtures;
  CLI::App* fixtures_cmd = app.add_subcommand("fixtures", "Generate synthetic hand-state trajectories");
  fixtures_cmd->add_option("--kind", fixtures.kind, "open-hand | pinch-close | two-finger | random-walk");
  fixtures_cmd->add_flag("--all", fixtures.all, "write every kind to --dir/<kind>.jsonl");
  fixtures_cmd->add_option("--output,-o", fixtures.output, "output file for --kind");
  fixtures_cmd->add_option("--dir", fixtures.dir, "output directory for --all")->capture_default_str();
  fixtures_cmd->add_option("--human", fixtures.human, "human hand model file")->capture_default_str();
  fixtures_cmd->add_option("--rate", fixtures.options.rate_hz, "frame rate in Hz")->capture_default_str();
  fixtures_cmd->add_option("--frames", fixtures.options.frames, "frame count (0: per-kind default)")->capture_default_str();
  fixtures_cmd->add_option("--seed", fixtures.options.seed, "random seed")->capture_default_str();
  fixtures_cmd->add_option("--start-z", fixtures.start_z, "initial palm height in meters")->capture_default_str();
  fixtures_cmd->add_flag("--keypoints", fixtures.options.keypoints, "emit keypoint payloads");
  fixtures_cmd->add_option("--cameras", fixtures.options.cameras, "per-keypoint camera candidates")->capture_default_str();
  fixtures_cmd->add_option("--candidate-noise", fixtures.options.candidate_noise, "candidate noise, meters")->capture_default_str();
  fixtures_cmd->add_option("--outlier-rate", fixtures.options.outlier_rate, "probability of a 10 cm outlier candidate")->capture_default_str();
  fixtures_cmd->add_option("--weights-out", fixtures.weights_out, "also write a seeded random keypoint network");
  fixtures_cmd->add_option("--weights-seed", fixtures.weights_seed, "seed for --weights-out")->capture_default_str();

  ConfigInitOptions config_init;
  CLI::App* config_cmd = app.add_subcommand("config-init", "Write the effective application config as JSON");
  config_cmd->add_option("--config", config_init.config, "base config file (default: built-in defaults)");
  config_cmd->add_option("--output,-o", config_init.output, "output file (default: stdout)");
  config_init.flags.add_to(*config_cmd);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : static_cast<int>(ExitCode::usage);
  }

  try {
    if (replay_cmd->parsed()) return cmd_replay(replay, out, err);
    if (serve_cmd->parsed()) return cmd_serve(serve, out, err);
    if (send_cmd->parsed()) return cmd_send(send, out, err);
    if (fk_cmd->parsed()) return cmd_fk(fk, out);
    if (bench_cmd->parsed()) return cmd_bench(bench, out);
    if (export_cmd->parsed()) return cmd_export(exp, out);
    if (fixtures_cmd->parsed()) return cmd_fixtures(fixtures, out);
    if (config_cmd->parsed()) return cmd_config_init(config_init, out);
    return static_cast<int>(ExitCode::usage);
  } catch (const CliError& e) {
    return exit_for(e, err, e.code());
  } catch (const NetworkError& e) {
    return exit_for(e, err, ExitCode::network);
  } catch (const ModelError& e) {
    return exit_for(e, err, ExitCode::parse);
  } catch (const CodecError& e) {
    return exit_for(e, err, ExitCode::parse);
  } catch (const nlohmann::json::exception& e) {
    return exit_for(e, err, ExitCode::parse);
  } catch (const std::invalid_argument& e) {
    return exit_for(e, err, ExitCode::invalid_input);
  } catch (const std::exception& e) {
    return exit_for(e, err, ExitCode::internal);
  }
}

}  // namespace retarget::cli
