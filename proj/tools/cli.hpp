#ifndef PED_TOOLS_CLI_HPP
#define PED_TOOLS_CLI_HPP

#include <ostream>

namespace ped::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitNumerical = 3;

/// Runs one command. The payload goes to `out`, diagnostics to `err`.
int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace ped::cli

#endif // PED_TOOLS_CLI_HPP
