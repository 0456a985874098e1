#pragma once

#include <iosfwd>

// The pflsim command-line front end, callable in-process for testing.
namespace pfl::cli {

inline constexpr const char* tool_version = "1.0.0";

enum ExitCode : int { success = 0, internal_error = 1, validation_error = 2, non_convergence = 3 };

/// Parses argv, runs one subcommand and returns its exit code. Normal output goes
/// to `out`; failures are reported on `err` as a one-line JSON object.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pfl::cli
