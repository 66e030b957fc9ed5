#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "config.hpp"

namespace countflow::cli {

const std::vector<std::string>& command_names();

/// Runs one subcommand with a resolved config. Progress goes to `log`.
/// Throws ConfigError for invalid settings; other exceptions are runtime
/// failures.
void run_command(const std::string& name, const Json& cfg, std::ostream& log);

/// Maps an in-flight exception to the documented exit code (1 usage or
/// config, 2 runtime or numerical) and prints it to `err`.
int report_exception(std::ostream& err);

}  // namespace countflow::cli
