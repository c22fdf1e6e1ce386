#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qrh::cli {

/// Exit statuses of the command-line tool.
inline constexpr int kOk = 0;
inline constexpr int kUsageError = 1;
inline constexpr int kConfigError = 2;
inline constexpr int kNumericalError = 3;

/// Runs one command, `args` excluding the program name. Diagnostics go to
/// `err`; on failure a single machine-readable line
///   error: status=<n> module=<module> kind=<config|numerical> message="..."
/// is written there.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qrh::cli
