#pragma once

#include <iosfwd>

namespace fdivergence::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kParseFailure = 2,
  kPrecondition = 3,
  kNotConverged = 4,
  kCertificationFailure = 5,
  kConfigError = 6,
};

/// Entry point for the `fdiv` tool. Output goes to the given streams so tests
/// can run commands in-process.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fdivergence::cli
