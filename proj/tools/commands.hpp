#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dncalc::cli {

inline constexpr int exit_pass = 0;
inline constexpr int exit_fail = 1;
inline constexpr int exit_config = 2;

/// Entry point of the dncalc tool; returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dncalc::cli
