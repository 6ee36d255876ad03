#pragma once

#include <string>
#include <vector>

namespace flowsentry {

/// Runs one CLI invocation (argv without the program name).
/// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
int run_cli(const std::vector<std::string>& args);

} // namespace flowsentry
