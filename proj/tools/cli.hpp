#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace fnf::cli {

/// Runs the `fnf` command line. `args` excludes the program name.
/// Returns the process exit code: 0 ok, 2 validation or usage error,
/// 3 comparison precondition, 4 numerical failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fnf::cli
