#pragma once

#include <iosfwd>

namespace vmm {

/// Exit codes: 0 success, 1 validation error, 2 runtime failure, 3 failed check.
enum ExitCode { kExitOk = 0, kExitValidation = 1, kExitRuntime = 2, kExitCheck = 3 };

/// Parses argv and runs one subcommand (width, solve, sweep-sigma, certify, demo, selftest).
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vmm
