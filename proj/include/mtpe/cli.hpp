#pragma once

#include <iosfwd>

namespace mtpe::cli {

enum ExitCode : int {
  kOk = 0,
  kPartialFailure = 1,  // some segments failed
  kFatal = 2,           // bad flags, unreadable input, rejected requests
};

/// Entry point of the `mtpe` command. Diagnostics go to `err`, summaries to `out`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mtpe::cli
