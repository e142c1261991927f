#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "retarget/hand_model.hpp"
#include "retarget/pose.hpp"

namespace retarget::cli {

/// Whole file, or standard input for "-". Throws CliError(io).
std::string read_text(const std::string& path);
/// Throws CliError(io).
void write_text(const std::string& path, const std::string& text);
/// Newline-separated records; blank lines are skipped, an unterminated last line is kept.
std::vector<std::string> split_lines(const std::string& text);

/// Throws CliError(io | parse).
std::shared_ptr<const HandModel> read_model(const std::string& path);

/// Shortest text that parses back to the same double.
std::string format_double(double value);
nlohmann::ordered_json pose_json(const Pose& pose);

}  // namespace retarget::cli
