#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rescnn::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitUsage = 2,
  kExitData = 3,
  kExitNumeric = 4,
};

/// Runs one subcommand. `args` excludes the program name; `predict` reads
/// texts from `in` when none are given on the command line.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace rescnn::cli
