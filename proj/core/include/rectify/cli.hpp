#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rectify {

// Entry point behind the `rectify` binary. Exit codes: 0 success,
// 1 validation error, 2 usage error. Diagnostics go to `err`, data to
// files or `out`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rectify
