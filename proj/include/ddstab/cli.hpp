#pragma once

#include <iosfwd>

namespace ddstab::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitError = 1,          // I/O, parse or validation failure
  kExitNotExciting = 2,    // pe-check: signal is not persistently exciting
  kExitDesignFailed = 3,   // design/certify: infeasible or assumption fails
  kExitNotCertified = 4,   // sweep: smallest-epsilon row not certified
};

/// Entry point behind the `ddstab` binary; streams are injectable for tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ddstab::cli
