#pragma once

namespace bevtrack {

// Dispatches synth | train | track | eval | compare-search. Returns 0 on
// success, 1 on a usage error, 2 on a runtime error.
int run_command(int argc, const char* const* argv);

}  // namespace bevtrack
