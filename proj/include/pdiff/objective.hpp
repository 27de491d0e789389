#pragma once

// Linear objectives on the coefficients of c(x): either the exact integral of
// c over a box or the sample mean of c over uniformly drawn points.

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "pdiff/polynomial.hpp"
#include "pdiff/semialgebraic.hpp"

namespace pdiff {

struct ObjectiveFunctional {
  std::vector<Monomial> monomials;
  Eigen::VectorXd weights;  // objective = weights . coefficients, aligned with `monomials`
  ObjectiveMode mode = ObjectiveMode::kBoxIntegral;
  int n_samples = 0;
  std::uint64_t seed = 0;

  /// Value of the functional on a polynomial over the same variables.
  double apply(const Polynomiald& c) const;
};

/// Exact integral of x^alpha over a box, for each monomial.
ObjectiveFunctional box_integral_weights(const Box& box, const std::vector<Monomial>& monomials);

/// Mean of x^alpha over `n` points drawn uniformly from `box` (Philox stream
/// keyed by `seed`). When `region` is given, points are drawn uniformly from
/// box ∩ region by rejection.
ObjectiveFunctional monte_carlo_weights(const Box& box, int n, std::uint64_t seed,
                                        const std::vector<Monomial>& monomials,
                                        const SemiAlgebraicSet* region = nullptr);

/// Weights from an explicit point set (one point per column).
ObjectiveFunctional sample_mean_weights(const Eigen::MatrixXd& points, const std::vector<Monomial>& monomials);

/// Largest relative error of sample mean weights against the exact means over
/// `box`. A monomial with exact mean zero is measured against the root mean
/// square of x^alpha over the box instead.
double sampled_weight_discrepancy(const ObjectiveFunctional& sampled, const Box& box);

}  // namespace pdiff
