#pragma once

// Command-line driver.
//
//   pdiff solve <problem.json> --out <dir> [--long-running] [--seed N]
//               [--grid-res N...] [--objective box|mc] [--dump-sdp]
//               [--verify-res N...] [--n-z N] [--no-verify]
//   pdiff verify <bundle dir> [--grid-res N...] [--n-z N] [--seed N]
//   pdiff grid <bundle dir> [--grid-res N...] [--out <path>]
//
// solve exit codes: 0 every constraint has a valid certificate, 1 input
// error, 2 solved but some certificate failed its check, 3 solver failure.
// verify: 0 iff no soundness violation, 1 missing or corrupted bundle, 2
// violations found. grid: 0 on success, 1 on input or I/O errors.

#include <ostream>

namespace pdiff {

enum ExitCode : int {
  kExitOk = 0,
  kExitInputError = 1,
  kExitInvalidCertificate = 2,
  kExitSolverFailure = 3,
};

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pdiff
