#pragma once

#include <deque>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "retarget/pipeline.hpp"

namespace retarget::cli {

/// One command-line flag per scalar or numeric-array key of the application config, named by
/// its dotted path (e.g. --retarget.solver.max_iters, --pipeline.workspace_size X Y Z).
/// Flags override the config file, which overrides the built-in defaults.
class ConfigFlags {
 public:
  void add_to(CLI::App& app);
  /// Throws CliError(io | parse | usage | invalid_input).
  AppConfig resolve(const std::string& config_path) const;
  /// Dotted names of every mirrored key, in config order.
  std::vector<std::string> names() const;

 private:
  struct Flag {
    std::vector<std::string> path;
    nlohmann::ordered_json default_value;
    std::vector<std::string> values;
    CLI::Option* option = nullptr;
  };
  void collect(const nlohmann::ordered_json& node, std::vector<std::string>& path);

  std::deque<Flag> flags_;
};

}  // namespace retarget::cli
