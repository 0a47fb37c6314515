#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace reusecfg::cli
{
inline constexpr int exit_ok = 0;
inline constexpr int exit_analysis_error = 1;
inline constexpr int exit_usage_error = 2;

/// Runs the command line `args` (args[0] is the program name). Machine
/// output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace reusecfg::cli
