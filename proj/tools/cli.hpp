#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lobpred::cli {

/// Runs the `lobpred` command line. `args` excludes the program name.
/// Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lobpred::cli
