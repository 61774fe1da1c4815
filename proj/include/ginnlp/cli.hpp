#pragma once

#include <iosfwd>

namespace ginnlp {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitData = 2,
    kExitTrainingAbort = 3,
    kExitAdapter = 4,
};

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace ginnlp
