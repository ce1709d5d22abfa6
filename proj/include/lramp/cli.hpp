#ifndef LRAMP_CLI_HPP
#define LRAMP_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace lramp::cli {

// Exit codes shared by every subcommand.
constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;

// Runs one invocation: args as on the command line, without the program
// name. Streams receive what would go to stdout/stderr.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lramp::cli

#endif
