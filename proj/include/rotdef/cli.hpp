#pragma once

namespace rotdef {

/// Entry point behind the `rotdef` binary; exposed so tests can drive it.
/// Returns 0 on success, 2 on usage errors, 1 on runtime failures.
int run_cli(int argc, const char* const* argv);

}  // namespace rotdef
