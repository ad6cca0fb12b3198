#pragma once

#include <iosfwd>

namespace eyetheia::cli {

enum ExitCode { kOk = 0, kUsage = 1, kDataError = 2, kInternal = 3 };

// Parses argv and runs one subcommand: train, eval, gridsearch, calibrate, analyze, gradcheck, serve,
// generate-synthetic. Tables go to `out` as CSV with a header row; diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace eyetheia::cli
