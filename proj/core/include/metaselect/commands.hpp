#pragma once

#include <iosfwd>
#include <string>

#include "metaselect/config.hpp"

namespace metaselect {

// CLI entry points. Each returns a process exit code (see ExitCode).

// Full analytic + Monte-Carlo sweep. Writes the CSV to config.output_path
// and a best-model summary to out. Output bytes depend only on the config.
int cmd_sweep(const RunConfig& config, std::ostream& out);

// Closed forms only: per-model exact variance/bias/total at every n, plus
// the model-free row, the printed single-factor forms, rho^2 and both
// crossover estimates. Table to out, CSV to config.output_path.
int cmd_analytic(const RunConfig& config, std::ostream& out);

// Crossover summary per model: bias_sq, exact n*, printed n*.
int cmd_nstar(const RunConfig& config, std::ostream& out);

// Runs the internal consistency checks and prints one PASS/FAIL line per
// invariant (INFO lines for the documented printed-vs-exact gaps).
// tolerance_scale multiplies every bound; 1.0 for real runs.
int cmd_verify(const RunConfig& config, std::ostream& out, double tolerance_scale = 1.0);

// Argv-level entry point used by the binary and by tests; parses
// subcommands and flags, loads the config, applies overrides, dispatches.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Shared numeric formatting for all reports: 10 significant digits,
// round-half-even; infinities serialize as "inf".
std::string format_value(double v);

}  // namespace metaselect
