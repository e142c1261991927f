#include "cli/io.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include "cli/cli.hpp"
#include "retarget/messages.hpp"

namespace retarget::cli {

std::string read_text(const std::string& path) {
  if (path == "-") return {std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>()};
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError(ExitCode::io, "cannot open '" + path + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw CliError(ExitCode::io, "error reading '" + path + "'");
  return buffer.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CliError(ExitCode::io, "cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw CliError(ExitCode::io, "error writing '" + path + "'");
}

std::vector<std::string> split_lines(const std::string& text) {
  LineFramer framer(text.size() + 1);
  framer.feed(text);
  std::vector<std::string> lines;
  auto keep = [&](std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") != std::string::npos) lines.push_back(std::move(line));
  };
  while (auto line = framer.next_line()) keep(std::move(*line));
  keep(framer.take_remainder());
  return lines;
}

std::shared_ptr<const HandModel> read_model(const std::string& path) {
  const std::string text = read_text(path);
  try {
    return std::make_shared<const HandModel>(parse_model(text));
  } catch (const ModelError& e) {
    throw CliError(ExitCode::parse, "model '" + path + "': " + e.what());
  }
}

std::string format_double(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, result.ptr);
}

nlohmann::ordered_json pose_json(const Pose& pose) {
  const Quat& q = pose.rotation;
  return {{"q", {q.w(), q.x(), q.y(), q.z()}}, {"p", {pose.translation.x(), pose.translation.y(), pose.translation.z()}}};
}

}  // namespace retarget::cli
