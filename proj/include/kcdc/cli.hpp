#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kcdc {

// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitNumerical = 2, kExitIo = 3 };

// Runs the tool on args (program name excluded). Never throws; errors are
// reported on err and mapped to an exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace kcdc
