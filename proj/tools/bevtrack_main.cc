#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "bevtrack/cli.h"

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_logger_st("bevtrack"));
  return bevtrack::run_command(argc, argv);
}
