#pragma once

#include <iosfwd>

namespace opart {

/// Exit codes of the command-line front end.
enum ExitCode : int { exit_ok = 0, exit_runtime = 1, exit_usage = 2 };

/// Runs one subcommand (synth, solve, evaluate, sweep, embed, serve). Usage
/// and runtime failures are reported on `err` as a JSON error object.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace opart
