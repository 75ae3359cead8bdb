#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace insar::cli {

/// Exit codes of run_command.
enum ExitCode : int {
    kSuccess = 0,
    kUsageError = 1,
    kDataError = 2,
    kNumericError = 3,
};

/// Runs one subcommand (simulate, train-denoiser, prepare-labels,
/// train-classifier, classify, evaluate, export-png). `args` excludes the
/// program name. Results go to `out`, progress and diagnostics to `err`.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace insar::cli
