#pragma once

#include <iosfwd>

namespace npts {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitRuntime = 2 };

/// Entry point of the `npts` tool: subcommands run, replay and aggregate.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace npts
