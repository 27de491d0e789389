#include "pdiff/sdp_solver.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace pdiff {
namespace {

using testing_util::LambdaMaxProblem;
using testing_util::RandomSymmetric;

TEST(SdpSolverTest, LambdaMaxOfDiagonal) {
  const Eigen::MatrixXd A = Eigen::Vector3d(1.0, 2.0, 3.0).asDiagonal();
  const SdpSolution sol = solve(LambdaMaxProblem(A));
  ASSERT_EQ(sol.status, SolveStatus::kOptimal);
  EXPECT_NEAR(sol.free_vars[0], 3.0, 1e-7);
}

TEST(SdpSolverTest, LambdaMaxMatchesEigensolver) {
  std::mt19937_64 gen(20240917);
  std::uniform_int_distribution<int> dim(3, 15);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = dim(gen);
    const Eigen::MatrixXd A = RandomSymmetric(n, gen);
    const double expected = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(A).eigenvalues().maxCoeff();
    const SdpSolution sol = solve(LambdaMaxProblem(A));
    ASSERT_EQ(sol.status, SolveStatus::kOptimal) << "trial " << trial << " n " << n;
    EXPECT_NEAR(sol.free_vars[0], expected, 1e-6) << "trial " << trial << " n " << n;
  }
}

TEST(SdpSolverTest, SmallSosProgram) {
  // max g s.t. x^2 - 2x + 3 - g = [1 x] Q [1 x]^T, Q >= 0. Optimum g = 2.
  SdpProblem p;
  p.block_dims = {2};
  p.n_free = 1;
  p.n_rows = 3;
  p.objective = Eigen::VectorXd::Constant(1, 1.0);
  p.rhs = Eigen::Vector3d(3.0, -2.0, 1.0);
  p.block_entries = {{0, 0, 0, 0, 1.0}, {1, 0, 0, 1, 1.0}, {2, 0, 1, 1, 1.0}};
  p.free_entries = {{0, 0, 1.0}};
  const SdpSolution sol = solve(p);
  ASSERT_EQ(sol.status, SolveStatus::kOptimal);
  EXPECT_NEAR(sol.free_vars[0], 2.0, 1e-7);
  EXPECT_NEAR(sol.block_matrices[0](1, 1), 1.0, 1e-7);
  EXPECT_NEAR(sol.block_matrices[0](0, 1), -1.0, 1e-7);
}

TEST(SdpSolverTest, NegativeTraceIsInfeasible) {
  EXPECT_EQ(solve(testing_util::NegativeTraceProblem()).status, SolveStatus::kInfeasible);
}

TEST(SdpSolverTest, UnboundedFreeVariable) {
  EXPECT_EQ(solve(testing_util::UnboundedProblem()).status, SolveStatus::kUnbounded);
}

TEST(SdpSolverTest, InconsistentDuplicateRowIsInfeasible) {
  SdpProblem p = LambdaMaxProblem(Eigen::Matrix2d::Identity());
  p.block_entries.push_back({p.n_rows, 0, 0, 0, 1.0});
  p.free_entries.push_back({p.n_rows, 0, -1.0});
  p.rhs.conservativeResize(p.n_rows + 1);
  p.rhs[p.n_rows] = 5.0;
  ++p.n_rows;
  EXPECT_TRUE(preprocess(p).inconsistent);
  EXPECT_EQ(solve(p).status, SolveStatus::kInfeasible);
}

TEST(SdpSolverTest, PreprocessRemovesDuplicateRow) {
  std::mt19937_64 gen(7);
  const Eigen::MatrixXd A = RandomSymmetric(4, gen);
  const SdpProblem base = LambdaMaxProblem(A);
  EXPECT_EQ(preprocess(base).problem.n_rows, base.n_rows);
  EXPECT_TRUE(preprocess(base).removed_rows.empty());

  SdpProblem dup = base;
  const int copy_of = 4;  // a diagonal row with a free entry
  for (const auto& e : base.block_entries) {
    if (e.row == copy_of) dup.block_entries.push_back({base.n_rows, e.block, e.i, e.j, 2.0 * e.value});
  }
  for (const auto& e : base.free_entries) {
    if (e.row == copy_of) dup.free_entries.push_back({base.n_rows, e.var, 2.0 * e.value});
  }
  dup.rhs.conservativeResize(base.n_rows + 1);
  dup.rhs[base.n_rows] = 2.0 * base.rhs[copy_of];
  dup.n_rows = base.n_rows + 1;

  const PreprocessedProblem pre = preprocess(dup);
  EXPECT_FALSE(pre.inconsistent);
  ASSERT_EQ(pre.removed_rows.size(), 1u);
  EXPECT_EQ(pre.problem.n_rows, base.n_rows);

  const SdpSolution s1 = solve(base), s2 = solve(dup);
  ASSERT_EQ(s2.status, SolveStatus::kOptimal);
  EXPECT_EQ(s2.rows_before, base.n_rows + 1);
  EXPECT_EQ(s2.rows_after, base.n_rows);
  EXPECT_NEAR(s1.free_vars[0], s2.free_vars[0], 1e-8);
  EXPECT_EQ(s2.dual_vector.size(), dup.n_rows);
}

TEST(SdpSolverTest, RowPermutationInvariance) {
  std::mt19937_64 gen(11);
  const Eigen::MatrixXd A = RandomSymmetric(6, gen);
  const SdpProblem base = LambdaMaxProblem(A);
  std::vector<int> perm(static_cast<std::size_t>(base.n_rows));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), gen);
  SdpProblem permuted = base;
  for (auto& e : permuted.block_entries) e.row = perm[static_cast<std::size_t>(e.row)];
  for (auto& e : permuted.free_entries) e.row = perm[static_cast<std::size_t>(e.row)];
  for (int r = 0; r < base.n_rows; ++r) permuted.rhs[perm[static_cast<std::size_t>(r)]] = base.rhs[r];
  const SdpSolution s1 = solve(base), s2 = solve(permuted);
  ASSERT_EQ(s2.status, SolveStatus::kOptimal);
  EXPECT_NEAR(s1.free_vars[0], s2.free_vars[0], 1e-8);
}

TEST(SdpSolverTest, OptimalSolutionSatisfiesStoppingGuarantees) {
  std::mt19937_64 gen(3);
  const SdpProblem p = LambdaMaxProblem(RandomSymmetric(8, gen));
  const SdpSolution sol = solve(p);
  ASSERT_EQ(sol.status, SolveStatus::kOptimal);
  EXPECT_LE(sol.relative_gap, 1e-8);
  EXPECT_LE(sol.primal_infeasibility, 1e-8);
  for (std::size_t k = 0; k < sol.block_matrices.size(); ++k) {
    const double complementarity = sol.block_matrices[k].cwiseProduct(sol.dual_slacks[k]).sum();
    EXPECT_LE(std::abs(complementarity), 10.0 * sol.final_gap + 1e-15);
  }
  EXPECT_LE(sol.primal_objective, sol.dual_objective + sol.final_gap + 1e-9);
}

TEST(SdpSolverTest, DumpRoundTrip) {
  std::mt19937_64 gen(5);
  const SdpProblem p = LambdaMaxProblem(RandomSymmetric(3, gen));
  std::stringstream ss;
  write_sdp_dump(p, ss);
  const SdpProblem q = read_sdp_dump(ss);
  EXPECT_EQ(q.block_dims, p.block_dims);
  EXPECT_EQ(q.n_rows, p.n_rows);
  EXPECT_EQ(q.n_free, p.n_free);
  EXPECT_EQ(q.rhs, p.rhs);
  EXPECT_EQ(q.objective, p.objective);
  ASSERT_EQ(q.block_entries.size(), p.block_entries.size());
  for (std::size_t t = 0; t < p.block_entries.size(); ++t) {
    EXPECT_EQ(q.block_entries[t].row, p.block_entries[t].row);
    EXPECT_EQ(q.block_entries[t].value, p.block_entries[t].value);
  }
  std::stringstream again;
  write_sdp_dump(q, again);
  std::stringstream first;
  write_sdp_dump(p, first);
  EXPECT_EQ(first.str(), again.str());
}

TEST(SdpSolverTest, RejectsMalformedProblem) {
  SdpProblem p = LambdaMaxProblem(Eigen::Matrix2d::Identity());
  p.block_entries.push_back({0, 0, 1, 0, 1.0});  // i > j
  EXPECT_THROW(p.validate(), std::invalid_argument);
  std::stringstream bad("pdiff-sdp 2\n");
  EXPECT_THROW(read_sdp_dump(bad), std::runtime_error);
}

}  // namespace
}  // namespace pdiff
