#pragma once

#include <string>
#include <vector>

namespace f2f {

inline constexpr const char* kToolVersion = "0.1.0";

// Runs the command line; args excludes the program name. Returns the exit
// status (0 ok, 2 usage, 3 data, 4 numerical).
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, char** argv);

}  // namespace f2f
