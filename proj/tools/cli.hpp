#pragma once

#include <ostream>

namespace crashforge {

/// Entry point behind the crashforge binary. Returns the process exit code:
/// 0 success, 1 usage error (usage on err), 2 runtime error (one line on err).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace crashforge
