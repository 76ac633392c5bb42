#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace falldet::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kUsage = 1,  ///< bad flags, config, grid, or scenario
  kData = 2,   ///< unreadable input, bad stream line, unwritable output
};

/// Runs the `falldet` command line. args[0] is the program name.
/// `in` backs `--input -`; verdicts, alerts and reports go to `out`; diagnostics to `err`.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace falldet::cli
