#pragma once

#include <iosfwd>

namespace rmstcea {

/// Exit statuses of the command-line front end.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitEstimation = 2 };

/// Runs `rmstcea <fit|rmst|cea|simulate> [flags]`. The report goes to --out (or `out`);
/// diagnostics go to `err`. On estimation failure the report is still written with
/// status "failed".
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rmstcea
