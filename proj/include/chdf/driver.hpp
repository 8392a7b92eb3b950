#pragma once

// Scenario presets, the time loop, the invariant suite and the stationary
// solve, each returning a process exit status.

#include <iosfwd>
#include <string>

#include "chdf/config.hpp"
#include "chdf/errors.hpp"
#include "chdf/state.hpp"

namespace chdf {

enum ExitCode : int { kExitOk = 0, kExitValidation = 2, kExitSolver = 3, kExitIo = 4 };

/// Maps a library error onto the exit status.
int exit_code_for(const Error& e);

/// Builds the configured initial state (seeded, deterministic).
State initial_condition(const RunConfig& cfg, const GridPtr& grid);

/// Time loop with one ledger row per step; aborts on the first violated
/// invariant after writing that step's row.
int run(const RunConfig& cfg, std::ostream& log);
/// Invariant suite at the configured grid size; prints a pass/fail table.
int check(const RunConfig& cfg, std::ostream& log);
/// Stationary solve from the configured initial state.
int steady(const RunConfig& cfg, std::ostream& log);

}  // namespace chdf
