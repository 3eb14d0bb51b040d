#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bracket {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumerical = 3 };

/// Runs one command. `args` excludes the program name. Reports go to `out`
/// (and to files under --out); failures print one line to `err`:
///   error kind=<usage|data|numerical> code=<n> message="..."
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bracket
