#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pcp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Runs one subcommand (gen-data, train, eval, sweep, ablate). `args` excludes
/// the program name. Diagnostics and the resolved config go to `log`.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& log);

}  // namespace pcp::cli
