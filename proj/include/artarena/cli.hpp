#pragma once

namespace artarena {

// Process exit statuses.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitConfig = 3;
inline constexpr int kExitValidation = 4;
inline constexpr int kExitBackend = 5;

/// The `arena` command line. Returns the exit status.
int run_cli(int argc, char** argv);

}  // namespace artarena
