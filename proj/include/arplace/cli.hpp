#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace arplace {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitDataError = 2;

/// Entry point behind the `arplace` executable. `args` excludes the program
/// name. Diagnostics and progress go to `err`, help text to `out`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace arplace
