#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sadepth::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;  // validation or acceptance failure
inline constexpr int kExitUsage = 2;   // bad flags or unreadable input

/// Runs the command line `args` (without the program name). Human-readable
/// output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sadepth::cli
