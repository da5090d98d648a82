#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace d2l {

// Exit codes: 0 success, 2 usage or configuration error, 3 runtime abort.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;

// Subcommands: gen-data, train, estimate-lid, summarize. args excludes the
// program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace d2l
