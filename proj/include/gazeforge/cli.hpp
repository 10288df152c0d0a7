// Command-line entry point shared by the `gazeforge` executable and the tests.
#ifndef GAZEFORGE_CLI_HPP
#define GAZEFORGE_CLI_HPP

#include <ostream>
#include <string>
#include <vector>

namespace gazeforge {

/// Runs one subcommand. `args` excludes the program name. Returns 0 on success, 2 for usage or
/// validation errors, 1 otherwise; failures print {"error": {...}} as one JSON line to `err`.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

const char* tool_version();

}  // namespace gazeforge

#endif  // GAZEFORGE_CLI_HPP
