#pragma once

namespace membrane {

// Parses the command line and runs one subcommand; returns the exit code
// (kExitOk, kExitConfig or kExitFailure).
int run_cli(int argc, const char* const* argv);

} // namespace membrane
