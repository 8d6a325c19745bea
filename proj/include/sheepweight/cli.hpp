#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sheepweight {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitMissingInput = 2;

/// Runs one command line (args excludes the program name). Returns the exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Parses the flat `key=value` config format. '#' starts a comment line.
std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text);

}  // namespace sheepweight
