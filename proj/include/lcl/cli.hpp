#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lcl::cli {

enum ExitCode : int {
    kOk = 0,
    kValidationError = 1,
    kNumericalFailure = 2,
    kAssertionFailure = 3,
};

/// Runs one subcommand. args excludes the program name. Results go to `out`,
/// progress and errors to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lcl::cli
