#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace restore_sim {

/// Exit codes of the command-line front end.
enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitDataLoss = 2,
    kExitInternal = 3,
};

/// Runs one restore-sim invocation. `args` is the command line without the
/// program name; `--out -` (the default) writes to `out`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Decimal count with an optional K or M suffix (powers of two).
std::uint64_t parse_byte_size(const std::string& text);

}  // namespace restore_sim
