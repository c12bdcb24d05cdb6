#pragma once

#include <ostream>

namespace tailrisk::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kIo = 3,
  kSolver = 4,
};

// Entry point of the `tailrisk` tool. Machine-readable output (one JSON
// document per line) goes to `out`; diagnostics and human tables go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tailrisk::cli
