#pragma once

#include <ostream>

#include "genesis/runtime.hpp"

namespace genesis {

/// Process exit codes; stable across releases.
enum class ExitCode : int {
    Success = 0,
    Internal = 1,
    Validation = 2,
    LoopAbort = 3,
    Escalation = 4,
    Backend = 5,
    Usage = 6,
};

ExitCode exit_code_for(StageStatus status);

/// Entry point of the `genesis` tool. Machine-readable results go to `out`
/// as one canonical JSON line; diagnostics go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace genesis
