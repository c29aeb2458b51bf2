// Command-line front end: `xcal simulate | calibrate | evaluate`.
//
// Exit codes: 0 ok, 1 other failure, 2 configuration or input error,
// 3 degenerate motion, 4 insufficient line matches.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace xcal {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDegenerate = 3;
inline constexpr int kExitInsufficientMatches = 4;

// args[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace xcal
