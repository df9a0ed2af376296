#pragma once

#include <string>
#include <vector>

namespace modc::cli {

enum ExitCode : int { kOk = 0, kValidation = 2, kEmptyResult = 3, kInternal = 4 };

/// Runs one subcommand. args[0] is the program name. Progress goes to
/// stdout, diagnostics to stderr, data to files.
int run(const std::vector<std::string>& args);

}  // namespace modc::cli
