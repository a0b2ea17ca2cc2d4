#pragma once

#include <ostream>

namespace canon {

enum ExitCode : int {
  kExitOk = 0,
  kExitInputError = 1,
  kExitNotConverged = 2,
  kExitVerificationFailed = 3,
};

/// Entry point of the `canon` tool: generate, forward, invert, sample, verify.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace canon
