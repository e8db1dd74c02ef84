#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace icc {

// Entry point behind the `icc` binary. `args` excludes the program name.
// Returns the process exit status: 0 success, 2 config error, 3 dataset
// error, 4 backend error, 5 internal invariant violation.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace icc
