#pragma once

namespace pursuit::cli {

/// Parses arguments and runs one subcommand. Returns 0 on success, 1 on a
/// usage error and 2 when the computation itself fails.
int run(int argc, const char* const* argv);

}  // namespace pursuit::cli
