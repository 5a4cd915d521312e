#pragma once

#include <iosfwd>

namespace tbinfo::cli {

/// Exit codes.
enum Exit : int { ok = 0, config_error = 2, domain_error = 3, insufficient_samples = 4 };

/// Runs the command line with the given arguments (argv[0] is the program
/// name). Tables go to `out` unless an output path is configured; warnings
/// and diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tbinfo::cli
