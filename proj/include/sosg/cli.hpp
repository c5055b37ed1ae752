#pragma once

#include <iosfwd>

namespace sosg {

/// Exit codes of the `sosg` binary.
enum ExitCode : int {
    kExitOk = 0,
    kExitInput = 2,
    kExitConfig = 3,
    kExitQuery = 4,
    kExitAnomaly = 5,
    kExitInternal = 10,
};

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace sosg
