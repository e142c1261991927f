#pragma once

#include <atomic>
#include <cassert>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "retarget/fusion.hpp"
#include "retarget/messages.hpp"
#include "retarget/mlp.hpp"
#include "retarget/registration.hpp"
#include "retarget/retargeter.hpp"

namespace retarget {

struct PipelineConfig {
  double rate_hz = 30.0;
  std::size_t queue_capacity = 4;
  /// Keypoint-to-angle network; keypoint payloads are error-skipped when empty.
  std::string weights_path;
  RegistrationConfig registration;
};

struct AppConfig {
  RetargetConfig retarget = default_retarget_config();
  FusionConfig fusion;
  PipelineConfig pipeline;
};

nlohmann::ordered_json to_json(const AppConfig& config);
/// Missing sections and keys take defaults.
AppConfig app_config_from_json(const nlohmann::json& j);
AppConfig load_app_config(const std::string& path);
/// SHA-256 of the canonical JSON form.
std::string config_hash(const AppConfig& config);
/// SHA-256 of the canonical model serialization.
std::string model_hash(const HandModel& model);

/// Drop-oldest FIFO shared by one producer and one consumer.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("queue capacity must be positive");
  }

  /// Returns how many queued entries were evicted to make room (0 or 1).
  std::size_t push(T value) {
    std::size_t evicted = 0;
    {
      std::lock_guard lock(mutex_);
      if (items_.size() == capacity_) {
        items_.pop_front();
        evicted = 1;
      }
      items_.push_back(std::move(value));
      assert(items_.size() <= capacity_);
      high_water_ = std::max(high_water_, items_.size());
    }
    ready_.notify_one();
    return evicted;
  }

  std::optional<T> try_pop() {
    std::lock_guard lock(mutex_);
    return pop_locked();
  }

  /// Waits up to `timeout` for an entry; empty on timeout or when closed and drained.
  std::optional<T> pop_wait(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mutex_);
    ready_.wait_for(lock, timeout, [&] { return !items_.empty() || closed_; });
    return pop_locked();
  }

  void close() {
    {
      std::lock_guard lock(mutex_);
      closed_ = true;
    }
    ready_.notify_all();
  }

  bool drained() const {
    std::lock_guard lock(mutex_);
    return closed_ && items_.empty();
  }
  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return items_.size();
  }
  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t high_water() const {
    std::lock_guard lock(mutex_);
    return high_water_;
  }

 private:
  std::optional<T> pop_locked() {
    if (items_.empty()) return std::nullopt;
    T value = std::move(items_.front());
    items_.pop_front();
    return value;
  }

  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<T> items_;
  std::size_t high_water_ = 0;
  bool closed_ = false;
};

enum class FrameErrc { decode, timestamp, mapping, solve };
std::string_view to_string(FrameErrc code);

/// A hand state that could not be turned into a command; the frame is skipped and counted.
class FrameError : public std::runtime_error {
 public:
  FrameError(FrameErrc code, const std::string& message) : std::runtime_error(message), code_(code) {}
  FrameErrc code() const noexcept { return code_; }

 private:
  FrameErrc code_;
};

/// Everything a pipeline run needs besides its input and output.
struct PipelineSetup {
  std::shared_ptr<const HandModel> human;
  std::shared_ptr<const HandModel> robot;
  AppConfig config;
  std::optional<MlpWeights> jointnet;

  /// Loads the weights named by config.pipeline.weights_path, if any.
  static PipelineSetup load(std::shared_ptr<const HandModel> human, std::shared_ptr<const HandModel> robot,
                            AppConfig config);
};

/// Mapping, retargeting, filtering and registration for one stream. Single owner.
class FrameProcessor {
 public:
  explicit FrameProcessor(const PipelineSetup& setup);

  /// Throws FrameError(mapping | solve); solver and filter state are untouched on error.
  RobotCommandMessage process(const HandStateMessage& msg, double t_emit, std::uint64_t dropped_so_far);

  const Retargeter& retargeter() const noexcept { return retargeter_; }
  bool registered() const noexcept { return registration_.has_value(); }
  const std::optional<Eigen::VectorXd>& last_command() const noexcept { return last_q_; }

 private:
  std::shared_ptr<const HandModel> human_;
  std::optional<MlpWeights> jointnet_;
  RegistrationConfig registration_config_;
  Retargeter retargeter_;
  KeypointFuser fuser_;
  SolveState state_;
  std::optional<Registration> registration_;
  std::optional<Eigen::VectorXd> last_q_;
};

/// Distances between every pair of fingertip frames of `robot` at `q`, keyed "a-b".
std::map<std::string, double> fingertip_distances(const HandModel& robot, const Eigen::VectorXd& q);

struct LatencyStats {
  double p50_ms = 0.0;
  double p95_ms = 0.0;
  double max_ms = 0.0;
};
/// Nearest-rank percentiles.
LatencyStats latency_stats(std::vector<double> samples_ms);

struct RunReport {
  std::string mode;
  std::uint64_t inputs = 0;
  std::uint64_t published = 0;
  std::uint64_t dropped = 0;
  std::uint64_t errors = 0;
  std::map<std::string, std::uint64_t> errors_by_kind;
  LatencyStats latency;
  double achieved_rate_hz = 0.0;
  double mean_solve_ms = 0.0;
  double max_solve_ms = 0.0;
  std::size_t max_queue_depth = 0;
  std::size_t queue_capacity = 0;
  std::string human_model_hash;
  std::string robot_model_hash;
  std::string config_hash;
  std::map<std::string, double> final_fingertip_distances;

  bool reconciles() const { return published + dropped + errors == inputs; }
};

nlohmann::ordered_json to_json(const RunReport& report);

using LineSink = std::function<void(const std::string& line)>;

/// Deterministic offline run. Input timestamps drive a virtual clock ticking at rate_hz from
/// the first frame's time; every tick publishes at most one queued frame with t_emit equal to
/// the tick time, and ticking continues after the input ends until the queue is empty.
/// solve_ms is written as 0 so identical inputs give identical output bytes.
RunReport run_replay(const std::vector<std::string>& lines, const PipelineSetup& setup, const LineSink& sink);

enum class ReadStatus { line, timeout, closed };
/// Blocking line reader that returns `timeout` periodically so the caller can observe stops.
using LineSource = std::function<ReadStatus(std::string& line)>;

/// Three threads: ingest (decode, enqueue), solve (one frame per tick at rate_hz on the
/// monotonic clock) and publish. Latency is publish time minus arrival time. Ends when the
/// source closes or `stop` is set; queued frames are drained before returning.
RunReport run_live(const LineSource& source, const PipelineSetup& setup, const LineSink& sink,
                   const std::atomic<bool>& stop);

}  // namespace retarget
