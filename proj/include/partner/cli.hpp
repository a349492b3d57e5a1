#pragma once

#include <iosfwd>

namespace partner {

/// Subcommands: fk, solve, run, bench. Returns the process exit status;
/// diagnostics go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace partner
