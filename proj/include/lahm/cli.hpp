#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lahm::cli {

enum ExitCode : int {
  kSuccess = 0,
  kInputFailure = 2,    ///< bad flags, unreadable or malformed files
  kNumericFailure = 3,  ///< a fit, solve or integration failed
};

/// Runs one subcommand. `args` excludes the program name. Accepts
/// `--config FILE` with key=value lines supplying any flag; flags given on
/// the command line take precedence.
int run(std::vector<std::string> args, std::ostream& out, std::ostream& err);

}  // namespace lahm::cli
