#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace momap::cli {

/// Exit codes of the momap tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;      // I/O, parse and format errors
inline constexpr int kExitInput = 2;   // shape and validation errors

/// Runs the tool on `args` (without the program name). Summary JSON goes to
/// `out`, tables and diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace momap::cli
