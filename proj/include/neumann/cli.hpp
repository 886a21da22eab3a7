#pragma once

#include <iosfwd>
#include <string>

namespace neumann::cli {

/// Process exit codes. Stable; scripts may rely on them.
enum ExitCode : int {
    ok = 0,
    criteria_failed = 1,
    incompatible_data = 2,
    solver_failure = 3,
    config_error = 4,
};

/// Entry point of the neumann_lab tool. Diagnostics go to `err`, progress
/// and summaries to `out`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Help text for the expression grammar accepted by --f and --g.
std::string grammar_help();

}  // namespace neumann::cli
