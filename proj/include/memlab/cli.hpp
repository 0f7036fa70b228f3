#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace memlab {

enum ExitCode : int { kExitOk = 0, kExitRunFailure = 1, kExitConfigError = 2 };

/// Parses the command line and runs one subcommand: gen-data, train, probe,
/// sweep, grid, decompose or check.
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace memlab
