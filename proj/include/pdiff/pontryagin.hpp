#pragma once

// Inner approximation of the Pontryagin difference A ⊖ B = {x : x + z ∈ A for
// all z ∈ B}. With A = ∩_i {a_i >= 0}, A ⊖ B = ∩_i ({a_i >= 0} ⊖ B), so each
// constraint gets its own sum-of-squares program and the result is
// C = {x ∈ R : min_i c_i(x) >= 0}.

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pdiff/polynomial.hpp"
#include "pdiff/sdp_solver.hpp"
#include "pdiff/semialgebraic.hpp"
#include "pdiff/sos_program.hpp"

namespace pdiff {

enum class ConstraintOutcome { kValid, kInvalidCertificate, kSolverFailure };

std::string_view to_string(ConstraintOutcome outcome);

struct ConstraintStats {
  ConstraintOutcome outcome = ConstraintOutcome::kSolverFailure;
  SolveStatus status = SolveStatus::kNumericalFailure;
  int iterations = 0;
  double seconds = 0.0;
  int rows_before = 0;
  int rows_after = 0;
  std::vector<int> block_dims;
  double relative_gap = 0.0;
  double epsilon = 0.0;  // constant subtracted by shrink_to_sound
  double residual_max = 0.0;
  double min_eigenvalue = 0.0;
  double objective_value = 0.0;  // objective of the scaled program
  double a_scale = 1.0;          // the scaled a_i is divided by this before assembly
  double max_c_over_region = 0.0;
  std::string message;
};

struct PdiffResult {
  // One polynomial per constraint of A in the caller's coordinates, already
  // lowered by its soundness margin.
  std::vector<Polynomiald> c_polys;
  // Certificates live in scaled coordinates x = center + half_width .* u, for
  // a_i divided by its largest scaled coefficient (ConstraintStats::a_scale).
  // c_polys are multiplied back by a_scale.
  std::vector<Certificate> certificates;
  std::vector<ConstraintStats> stats;
  std::vector<bool> empty_flags;  // max of c_i over R below zero
  std::vector<std::string> warnings;
  Eigen::VectorXd center;
  Eigen::VectorXd half_width;
  bool sound = false;  // every constraint has a valid certificate
  bool empty = false;  // C ∩ R is empty on the emptiness sample
  bool failed = false; // every constraint failed
  // Monte Carlo objective only: sampled_weight_discrepancy against the exact
  // box weights.
  std::optional<double> objective_weight_discrepancy;
  double seconds = 0.0;

  /// min_i c_i(x); +inf when there are no constraints.
  double c_min(std::span<const double> x) const;
};

struct PdiffOptions {
  SdpOptions sdp;                  // max_iters is taken from the ProblemSpec
  int emptiness_samples = 65536;   // grid points of R used to decide emptiness
  int containment_samples = 20000; // 0 disables the A ⊆ R sampling check
};

/// Runs scale -> assemble -> solve -> reconstruct -> shrink -> unscale for every
/// constraint of A. A failure in one constraint is recorded and the others
/// still run; `failed` is set when none succeeded.
PdiffResult compute_pdiff(const ProblemSpec& spec, const PdiffOptions& options = {});

/// Same as compute_pdiff but also returns the assembled programs (scaled).
PdiffResult compute_pdiff(const ProblemSpec& spec, const PdiffOptions& options, std::vector<SosProgram>* programs);

/// Cell-centered grid over a box; point index is row-major with the first
/// variable varying slowest.
struct Grid {
  Box box;
  std::vector<int> resolution;

  long long size() const;
  Eigen::VectorXd point(long long index) const;
  double cell_volume() const;
};

/// Grid of sizes `resolution` over `box`; a single entry applies to every axis.
Grid make_grid(const Box& box, const std::vector<int>& resolution);

/// min_i c_i at every grid point, row-major.
std::vector<double> evaluate_region(const std::vector<Polynomiald>& c_polys, const Grid& grid);
std::vector<double> evaluate_region(const PdiffResult& result, const Grid& grid);

}  // namespace pdiff
