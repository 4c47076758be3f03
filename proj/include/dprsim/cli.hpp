#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dprsim {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;    // bad arguments, missing file or invalid config
inline constexpr int kExitRuntime = 2;  // simulation or I/O failure
inline constexpr int kExitAlarm = 3;    // a countermeasure raised an alarm

// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dprsim
