#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace stfl {

/// Exit codes: 0 success, 1 usage or configuration error, 2 data, format,
/// I/O or shape error, 3 numeric failure (including failed gradient checks).
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

/// Dispatches `args` (without the program name) to a subcommand.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace stfl
