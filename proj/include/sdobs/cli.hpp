#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sdobs {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitInvariantViolation = 3;

/// Entry point of the `sdobs` executable. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sdobs
