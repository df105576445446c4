#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace infobif::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kNonConvergence = 3, kVerifyFailed = 4 };

/// Parses and runs one command line; argv[0] is the program name.
int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace infobif::cli
