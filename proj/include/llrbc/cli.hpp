#pragma once

namespace llrbc {

// Entry point behind the executable: run | report | gen-tasks | bench-eval.
// Throws config_error for bad user input and data_error for broken runtime state;
// the binary maps those to exit codes 1 and 2.
int run_cli(int argc, const char* const* argv);

}  // namespace llrbc
