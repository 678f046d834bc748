#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace asigboost {

/// Process exit codes of the command line.
enum ExitCode : int {
    kExitOk = 0,
    kExitPartial = 1,  // some benchmark cells or resample targets failed
    kExitConfig = 2,   // usage or configuration error
    kExitData = 3,     // data error, or every unit of work failed
};

/// Entry point of the asigboost command line; returns the process exit code.
int run_cli(int argc, char** argv);

/// Same, with `args` excluding the program name and explicit streams.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace asigboost
