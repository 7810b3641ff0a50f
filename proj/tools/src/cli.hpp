#pragma once

#include <iosfwd>

namespace audet::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

/// Parses argv, runs one command and maps errors onto exit codes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace audet::cli
