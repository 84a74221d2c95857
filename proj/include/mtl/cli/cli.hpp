#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mtl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitInput = 2;    // data or config error
inline constexpr int kExitRuntime = 3;

// Runs one subcommand. `args` excludes the program name. Results go to `out`
// or to files; diagnostics go to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mtl::cli
