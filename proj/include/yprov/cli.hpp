#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace yprov {

/// Process exit codes of the `yprov` command.
enum ExitCode : int {
    kExitOk = 0,
    kExitFindings = 1,  // violations, differences, conflicts
    kExitUsage = 2,
    kExitIo = 3,        // unreadable, missing or corrupt input
};

/// `args` excludes the program name. Data goes to `out`, diagnostics to `err`.
int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err);

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace yprov
