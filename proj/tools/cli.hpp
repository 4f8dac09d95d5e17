#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace safelevel::cli {

/// Exit codes. With --gate, a decision maps to 0 (none), 3 (potential) or
/// 4 (probable).
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitPotential = 3;
inline constexpr int kExitProbable = 4;

/// Runs the command line `args` (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace safelevel::cli
