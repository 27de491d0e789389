#pragma once

// Dense primal-dual interior-point solver for standard-form semidefinite
// programs with free variables:
//
//   maximize   objective . y
//   subject to sum_k <A_rk, X_k> + (B y)_r = rhs_r   for every row r,
//              X_k positive semidefinite, y free.
//
// The dual is: minimize rhs . u  subject to  B^T u = objective,
// S_k = sum_r u_r A_rk  positive semidefinite. Iterations follow the
// Nesterov-Todd direction with a Mehrotra predictor-corrector. A free variable
// pinned by a single row is substituted out before the solve; the others stay
// in the Newton system through a second Schur complement.

#include <iosfwd>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace pdiff {

/// Coefficient of entry (i, j), i <= j, of block `block` in equality row `row`.
/// The coefficient matrix is symmetric, so an off-diagonal entry contributes
/// value * (X_ij + X_ji) to the row.
struct BlockEntry {
  int row = 0;
  int block = 0;
  int i = 0;
  int j = 0;
  double value = 0.0;
};

struct FreeEntry {
  int row = 0;
  int var = 0;
  double value = 0.0;
};

struct SdpProblem {
  std::vector<int> block_dims;
  int n_free = 0;
  int n_rows = 0;
  Eigen::VectorXd rhs;
  std::vector<BlockEntry> block_entries;
  std::vector<FreeEntry> free_entries;
  Eigen::VectorXd objective;  // size n_free

  /// Throws std::invalid_argument on out-of-range indices or size mismatch.
  void validate() const;

  /// sum_k <A_rk, X_k> + (B y)_r for every row.
  Eigen::VectorXd apply(const std::vector<Eigen::MatrixXd>& blocks, const Eigen::VectorXd& free_vars) const;
};

// kNearOptimal: progress stopped (stall or iteration cap) at an iterate whose
// gap and residuals are all within SdpOptions::near_tol; that iterate is
// returned.
enum class SolveStatus { kOptimal, kNearOptimal, kMaxIterations, kInfeasible, kUnbounded, kNumericalFailure };

std::string_view to_string(SolveStatus status);

struct SdpOptions {
  double gap_tol = 1e-8;   // relative duality gap
  double feas_tol = 1e-8;  // relative primal / dual residuals
  double infeas_tol = 1e-8;
  double near_tol = 1e-5;  // acceptance threshold for kNearOptimal
  int max_iters = 200;
  bool verbose = false;
};

struct SdpSolution {
  Eigen::VectorXd free_vars;
  std::vector<Eigen::MatrixXd> block_matrices;
  std::vector<Eigen::MatrixXd> dual_slacks;
  Eigen::VectorXd dual_vector;  // one multiplier per row of the original problem
  SolveStatus status = SolveStatus::kNumericalFailure;
  int iterations = 0;
  double final_gap = 0.0;     // sum_k <X_k, S_k>
  double relative_gap = 0.0;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double primal_infeasibility = 0.0;  // ||rhs - A(X) - B y|| / (1 + ||rhs||), all original rows
  double dual_infeasibility = 0.0;
  int rows_before = 0;
  int rows_after = 0;
};

/// Problem with numerically dependent equality rows removed.
struct PreprocessedProblem {
  SdpProblem problem;
  std::vector<int> kept_rows;     // original index of each row of `problem`
  std::vector<int> removed_rows;  // original indices dropped as dependent
  bool inconsistent = false;      // a dependent row disagrees on its right-hand side
};

/// Rows owning a variable that no other row touches are independent and are
/// peeled off first; the remaining core goes through Gram-Schmidt, dropping a
/// row when its residual norm is at most 1e-10 times its original norm.
PreprocessedProblem preprocess(const SdpProblem& problem);

SdpSolution solve(const SdpProblem& problem, const SdpOptions& options = {});

/// Plain-text interchange layout; see README for the grammar.
void write_sdp_dump(const SdpProblem& problem, std::ostream& out);
SdpProblem read_sdp_dump(std::istream& in);

}  // namespace pdiff
