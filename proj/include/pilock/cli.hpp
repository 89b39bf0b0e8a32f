#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pilock {

/// Exit statuses of the command-line tool.
enum ExitStatus : int {
    kExitOk = 0,        // typable / pass / equivalent
    kExitNegative = 1,  // untypable / deadlock or leak / distinguished
    kExitResource = 2,  // state budget hit, verdict incomplete
    kExitUsage = 3,     // bad flags or unreadable input
};

/// Runs one command; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pilock
