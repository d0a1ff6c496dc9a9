#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace snr {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitInvariant = 3 };

// argv[0] is the program name.
int run_command(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);
int run_command(int argc, char** argv);

}  // namespace snr
