#pragma once

#include <iosfwd>

namespace demud {

/// Process exit codes.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitInternal = 3 };

/// Entry point of the `demud` command line tool (featurize, rank, eval,
/// explain). Exposed as a function so tests can drive it in-process.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace demud
