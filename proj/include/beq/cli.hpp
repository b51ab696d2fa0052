#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "beq/config.hpp"

namespace beq {

enum class Command { SolveConstrained, SolveBorrowing, Wellposedness, VerifyHjb, VerifyPerturb };

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitVerificationFail = 2;
inline constexpr int kExitNotProven = 3;

/// Runs one command, writing CSVs under cfg.output.directory and a short
/// summary to `out`. Library errors become exit 1 with a single
/// `error: kind=<kind> message=<text>` line on `err`.
int run_command(Command cmd, const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// The same as above, throwing instead of mapping errors to exit 1.
int run_command_or_throw(Command cmd, const RunConfig& cfg, std::ostream& out);

}  // namespace beq
