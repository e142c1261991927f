#pragma once

#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "retarget/pipeline.hpp"

namespace retarget::cli {

/// Process exit codes; each error class has its own code.
enum class ExitCode : int {
  ok = 0,
  internal = 1,
  usage = 2,
  io = 3,
  parse = 4,
  invalid_input = 5,
  network = 6,
  handshake = 7,
  budget = 8,
};

class CliError : public std::runtime_error {
 public:
  CliError(ExitCode code, const std::string& message) : std::runtime_error(message), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

/// Runs one command line (argv[0] is the program name). Never throws; returns the exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Cooperative stop flag for long-running subcommands; set from a signal handler.
std::atomic<bool>& stop_flag();

struct BenchOptions {
  std::size_t frames = 300;
  /// Wall-clock cap in seconds; 0 disables it. With a cap the workload depends on timing.
  double duration_s = 0.0;
  std::uint64_t seed = 1;
  /// Use only the first N task vectors of the configuration; 0 keeps all.
  std::size_t vectors = 0;
  /// Frames per statistics row.
  std::size_t window = 100;
  double budget_mean_ms = 33.0;
  double budget_p95_ms = 50.0;
};

struct BenchStats {
  std::size_t frames = 0;
  double mean_ms = 0.0;
  double p95_ms = 0.0;
  double max_ms = 0.0;
};

struct BenchResult {
  BenchOptions options;
  std::size_t vectors = 0;
  BenchStats overall;
  std::vector<BenchStats> rows;
  std::uint64_t total_iterations = 0;
  std::size_t converged = 0;
  /// Sum of all filtered command values; identical for identical workloads.
  double checksum = 0.0;
  bool within_budget() const {
    return overall.mean_ms <= options.budget_mean_ms && overall.p95_ms <= options.budget_p95_ms;
  }
};

/// Solves a seeded random walk of human configurations and times every solve.
BenchResult run_bench(const PipelineSetup& setup, const BenchOptions& options);
nlohmann::ordered_json to_json(const BenchResult& result);

}  // namespace retarget::cli
