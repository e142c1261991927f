#include "cli/config_flags.hpp"

#include <charconv>

#include "cli/cli.hpp"
#include "cli/io.hpp"

namespace retarget::cli {

namespace {

std::string dotted(const std::vector<std::string>& path) {
  std::string name;
  for (const std::string& p : path) name += (name.empty() ? "" : ".") + p;
  return name;
}

template <typename T>
T parse_number(const std::string& text, const std::string& flag) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw CliError(ExitCode::usage, "--" + flag + ": '" + text + "' is not a valid number");
  return value;
}

nlohmann::ordered_json parse_scalar(const std::string& text, const nlohmann::ordered_json& like, const std::string& flag) {
  if (like.is_boolean()) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw CliError(ExitCode::usage, "--" + flag + ": expected true or false, got '" + text + "'");
  }
  if (like.is_number_unsigned()) return parse_number<std::uint64_t>(text, flag);
  if (like.is_number_integer()) return parse_number<std::int64_t>(text, flag);
  if (like.is_number()) return parse_number<double>(text, flag);
  return text;
}

}  // namespace

void ConfigFlags::collect(const nlohmann::ordered_json& node, std::vector<std::string>& path) {
  if (node.is_object()) {
    for (const auto& [key, value] : node.items()) {
      path.push_back(key);
      collect(value, path);
      path.pop_back();
    }
    return;
  }
  if (node.is_array()) {
    const bool numeric = !node.empty() && std::all_of(node.begin(), node.end(), [](const auto& v) { return v.is_number(); });
    if (!numeric) return;  // structured lists (task vectors) are config-file only
  }
  flags_.push_back(Flag{path, node, {}, nullptr});
}

void ConfigFlags::add_to(CLI::App& app) {
  std::vector<std::string> path;
  collect(to_json(AppConfig{}), path);
  for (Flag& f : flags_) {
    const std::string name = dotted(f.path);
    const std::string def = f.default_value.dump();
    f.option = app.add_option("--" + name, f.values, "config key " + name + " (default " + def + ")")->group("Config keys");
    if (f.default_value.is_array()) {
      f.option->expected(static_cast<int>(f.default_value.size()));
    } else {
      f.option->expected(1);
    }
  }
}

AppConfig ConfigFlags::resolve(const std::string& config_path) const {
  nlohmann::ordered_json j;
  if (config_path.empty()) {
    j = to_json(AppConfig{});
  } else {
    try {
      j = nlohmann::ordered_json::parse(read_text(config_path));
    } catch (const nlohmann::json::exception& e) {
      throw CliError(ExitCode::parse, "config file '" + config_path + "' is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw CliError(ExitCode::parse, "config file '" + config_path + "' must hold a JSON object");
  }
  for (const Flag& f : flags_) {
    if (f.option == nullptr || f.option->count() == 0) continue;
    const std::string name = dotted(f.path);
    nlohmann::ordered_json value;
    if (f.default_value.is_array()) {
      value = nlohmann::ordered_json::array();
      for (const std::string& v : f.values) value.push_back(parse_number<double>(v, name));
    } else {
      value = parse_scalar(f.values.back(), f.default_value, name);
    }
    nlohmann::ordered_json* node = &j;
    for (const std::string& key : f.path) {
      if (!node->is_object()) throw CliError(ExitCode::parse, "config key '" + name + "' does not lead through objects");
      node = &(*node)[key];
    }
    *node = value;
  }
  try {
    return app_config_from_json(nlohmann::json::parse(j.dump()));
  } catch (const nlohmann::json::exception& e) {
    throw CliError(ExitCode::parse, std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw CliError(ExitCode::invalid_input, std::string("config: ") + e.what());
  }
}

std::vector<std::string> ConfigFlags::names() const {
  std::vector<std::string> out;
  for (const Flag& f : flags_) out.push_back(dotted(f.path));
  return out;
}

}  // namespace retarget::cli
