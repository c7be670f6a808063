#pragma once

#include <exception>
#include <iosfwd>

namespace fe::cli {

enum ExitCode : int { ok = 0, usage = 1, io = 2, contract = 3 };

// Entry point behind the command-line tool. Commands: compute, backtest,
// validate, synth, list. Diagnostics go through fe::diag; command output and
// error messages go to `out` and `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Exit code for an exception escaping a command.
int exit_code_for(const std::exception& e);

}  // namespace fe::cli
