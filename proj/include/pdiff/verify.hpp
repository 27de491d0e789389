#pragma once

// Solver-independent checks of a computed inner approximation. Everything
// here works from the polynomials c_i and the problem data alone; nothing
// from the SOS certificate is consulted. Results are sampling evidence, not
// proof.

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "pdiff/pontryagin.hpp"
#include "pdiff/semialgebraic.hpp"

namespace pdiff {

/// `n` points drawn uniformly from set ∩ box by rejection (Philox stream
/// `stream` under `seed`). Throws std::runtime_error when the acceptance rate
/// suggests the set misses the box.
std::vector<Eigen::VectorXd> sample_set(const SemiAlgebraicSet& set, const Box& box, int n, std::uint64_t seed,
                                        std::uint64_t stream = 0x5e7);

/// x ∈ A and x + z ∈ A for every sample z. Finitely many z make this an outer
/// approximation of membership in A ⊖ B.
bool brute_force_pdiff_membership(const SemiAlgebraicSet& A, const Eigen::VectorXd& x,
                                  const std::vector<Eigen::VectorXd>& z_samples);

struct VerificationOptions {
  std::vector<int> resolution;  // one entry applies to every axis
  int n_z = 1000;
  std::uint64_t seed = 1;
};

/// Default grid and z-sample counts by dimension: 400^2 / 1000 in 2-D,
/// 60^3 / 200 in 3-D.
VerificationOptions default_verification_options(int dim, std::uint64_t seed = 1);

struct VerificationReport {
  std::vector<int> resolution;
  long long n_grid = 0;
  int n_z_samples = 0;
  std::uint64_t seed = 0;
  long long n_in_c = 0;       // grid points with min_i c_i >= 0
  long long n_in_brute = 0;   // grid points passing brute_force_pdiff_membership
  long long n_c_not_brute = 0;
  long long soundness_violations = 0;  // points of C with margin below -sound_slack
  double worst_margin = 0.0;  // min over C of min_{i,z} a_i(x+z); +inf when C is empty
  double sound_slack = 0.0;   // floating-point evaluation allowance
  double conservatism = 0.0;  // |brute \ C| / |brute|
  double area_ratio = 0.0;    // |C| / |brute|
  double area_c = 0.0;        // |C| times the cell volume
  double area_brute = 0.0;
  double seconds = 0.0;
};

/// Grid over spec.region; C is {x in region : min_i c_i(x) >= 0}.
VerificationReport verify_result(const std::vector<Polynomiald>& c_polys, const ProblemSpec& spec,
                                 const VerificationOptions& options);

}  // namespace pdiff
