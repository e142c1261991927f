#include <csignal>
#include <iostream>

#include "cli/cli.hpp"

namespace {

extern "C" void on_signal(int) { retarget::cli::stop_flag().store(true); }

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::signal(SIGPIPE, SIG_IGN);
  return retarget::cli::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
