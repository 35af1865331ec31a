#pragma once

#include <iosfwd>

namespace hydrolimit {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitRuntime = 2 };

/// Entry point of the `hydrolimit` tool:
///   hydrolimit <simulate|solve-pde|converge|martingale|residual>
///              --config <path> [--out <dir>] [--seed <u64>] [--threads <k>]
/// Writes CSV files and manifest.json to the output directory, a one-line JSON summary
/// to `out` and progress and diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hydrolimit
