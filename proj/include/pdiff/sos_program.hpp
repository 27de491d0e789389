#pragma once

// Sum-of-squares program for one constraint a(x) >= 0 of A:
//
//   maximize    objective(c)
//   subject to  a(x+z) - c(x) - sum_j s_j(x,z) b_j(z) = m0^T Q0 m0,
//               s_j = mj^T Qj mj,   Q0, Qj positive semidefinite.
//
// With region localization the identity also subtracts sum_k r_k(x,z) (1 - x_k^2)
// with SOS r_k, so it only has to hold for x in [-1, 1]^n.
//
// assemble() turns this into an SdpProblem with one equality row per monomial
// of the identity; reconstruct_residual() rebuilds the identity from a solved
// Gram matrix set with plain polynomial arithmetic.

#include <string>
#include <vector>

#include <Eigen/Core>

#include "pdiff/objective.hpp"
#include "pdiff/polynomial.hpp"
#include "pdiff/sdp_solver.hpp"
#include "pdiff/semialgebraic.hpp"

namespace pdiff {

enum class BlockRole { kIdentity, kMultiplier, kRegionMultiplier };

struct GramBlock {
  std::vector<Monomial> basis;  // over the joint (x, z) variables
  BlockRole role = BlockRole::kIdentity;
  int multiplier_index = -1;    // j for the block of s_j, k for the block of r_k

  int dim() const { return static_cast<int>(basis.size()); }
};

struct SosDegrees {
  int deg_c = 0;
  int deg_s = 0;
  int identity_degree = 0;  // degree of the P-block identity, even
};

struct SosProgram {
  SdpProblem sdp;
  VariableSplit split;
  SosDegrees degrees;
  std::vector<GramBlock> blocks;         // identity block, one per b_j, then one per region coordinate
  std::vector<Monomial> row_monomials;   // joint monomial matched by each equality row
  std::vector<Monomial> c_monomials;     // over x; free variable k is the coefficient of c_monomials[k]
  Polynomiald a_shifted;                 // a(x+z)
  std::vector<Polynomiald> b_embedded;   // b_j(z) over the joint variables
  std::vector<Polynomiald> region_embedded;  // 1 - x_k^2 over the joint variables; empty unless localized
};

/// Thrown when a monomial of a(x+z) cannot be matched by any Gram entry or
/// coefficient of c: the chosen degrees are too low.
class DegreeBookkeepingError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Identity-block degree: max(deg a, deg_c, deg_s + max_j deg b_j), rounded up to even.
int identity_degree(const Polynomiald& a, const SemiAlgebraicSet& B, int deg_c, int deg_s);

/// Monomials of `candidates` kept by the Newton polytope test: 2m lies in the
/// convex hull of `support`, then repeatedly drop m when no pair of kept
/// monomials other than (m, m) sums to 2m and 2m is not in `support`.
std::vector<Monomial> newton_reduce(const std::vector<Monomial>& candidates, const std::vector<Monomial>& support);

/// `objective` must be defined on monomials over x; weights of c monomials it
/// does not list are zero. `localize_region` adds multipliers for the unit box
/// in x; the identity degree then covers deg_s + 2 as well.
SosProgram assemble(const Polynomiald& a, const SemiAlgebraicSet& B, int deg_c, int deg_s,
                    const ObjectiveFunctional& objective, GramBasis basis = GramBasis::kNewton,
                    bool localize_region = false);

/// m^T Q m over `nvars` variables.
Polynomiald gram_polynomial(const std::vector<Monomial>& basis, const Eigen::MatrixXd& Q, int nvars);

struct Certificate {
  std::vector<Eigen::MatrixXd> gram_matrices;
  Eigen::VectorXd c_coeffs;
  Polynomiald c;                        // over x
  std::vector<Polynomiald> multipliers;  // s_j, then r_k when localized, over (x, z)
  Polynomiald residual;                 // a(x+z) - c - sum s_j b_j [- sum r_k (1 - x_k^2)] - m0^T Q0 m0
  double residual_max = 0.0;
  std::vector<double> min_eigenvalues;
  double objective_value = 0.0;
  bool valid = false;
};

/// Rebuilds the identity from the Gram bases of `program`, the raw a and B,
/// and the solved values. Uses only polynomial arithmetic and a dense
/// symmetric eigensolver.
Certificate reconstruct_residual(const SosProgram& program, const Polynomiald& a, const SemiAlgebraicSet& B,
                                 const Eigen::VectorXd& c_coeffs, const std::vector<Eigen::MatrixXd>& gram,
                                 const ObjectiveFunctional& objective, const ToleranceSet& tolerances);

/// Largest |m(x, z)| over x in [-1, 1]^n and z in `z_box`.
double monomial_bound(const Monomial& m, int nx, const Box& z_box);

struct ShrinkResult {
  double epsilon = 0.0;
  Polynomiald c;  // c - epsilon
};

/// Constant margin epsilon such that a(x+z) >= c(x) - epsilon for every x in
/// [-1, 1]^n and z in B ∩ z_box, given the certificate's residual and
/// negative Gram eigenvalues. Mode off returns epsilon = 0.
ShrinkResult shrink_to_sound(const Certificate& cert, const SosProgram& program, const Box& z_box,
                             ShrinkMode mode);

}  // namespace pdiff
