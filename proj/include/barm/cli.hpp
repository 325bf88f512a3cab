#pragma once

// Command-line front end. Exit codes: 0 success, 1 domain failure, 2 usage error.

#include <iosfwd>
#include <string>
#include <vector>

namespace barm {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace barm
