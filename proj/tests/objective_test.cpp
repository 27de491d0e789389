#include "pdiff/objective.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace pdiff {
namespace {

Box MakeBox(std::initializer_list<double> lo, std::initializer_list<double> hi) {
  Box b;
  b.lower = Eigen::Map<const Eigen::VectorXd>(lo.begin(), static_cast<Eigen::Index>(lo.size()));
  b.upper = Eigen::Map<const Eigen::VectorXd>(hi.begin(), static_cast<Eigen::Index>(hi.size()));
  return b;
}

// Gauss-Legendre rule with m nodes on [lo, hi] via Newton iteration on P_m.
void GaussLegendre(int m, double lo, double hi, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(static_cast<std::size_t>(m), 0.0);
  weights.assign(static_cast<std::size_t>(m), 0.0);
  for (int i = 0; i < m; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (m + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= m; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = m * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    nodes[static_cast<std::size_t>(i)] = 0.5 * (hi - lo) * x + 0.5 * (hi + lo);
    weights[static_cast<std::size_t>(i)] = (hi - lo) / ((1.0 - x * x) * dp * dp);
  }
}

TEST(BoxIntegralTest, UnitSquareMonomial) {
  const auto f = box_integral_weights(MakeBox({0.0, 0.0}, {1.0, 1.0}), {Monomial({2, 1})});
  EXPECT_NEAR(f.weights[0], 1.0 / 6.0, 1e-15);
}

TEST(BoxIntegralTest, OddMonomialOnSymmetricIntervalIsZero) {
  const auto f =
      box_integral_weights(MakeBox({-1.0}, {1.0}), {Monomial(std::vector<int>{1}), Monomial(std::vector<int>{3})});
  EXPECT_EQ(f.weights[0], 0.0);
  EXPECT_EQ(f.weights[1], 0.0);
}

TEST(BoxIntegralTest, MatchesGaussLegendreQuadrature) {
  const Box box = MakeBox({-2.1, -2.1}, {2.1, 2.1});
  const auto f = box_integral_weights(box, {Monomial({4, 2})});
  std::vector<double> nodes, weights;
  GaussLegendre(12, -2.1, 2.1, nodes, weights);
  double q = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      q += weights[i] * weights[j] * std::pow(nodes[i], 4) * std::pow(nodes[j], 2);
    }
  }
  EXPECT_NEAR(f.weights[0], q, 1e-12 * std::abs(q));
}

TEST(BoxIntegralTest, UniformScalingFollowsDegree) {
  const auto monos = monomial_basis(2, 6);
  const Box box = MakeBox({-0.5, 0.2}, {1.0, 1.3});
  const double t = 1.7;
  Box scaled = box;
  scaled.lower *= t;
  scaled.upper *= t;
  const auto f = box_integral_weights(box, monos), g = box_integral_weights(scaled, monos);
  for (std::size_t i = 0; i < monos.size(); ++i) {
    const double factor = std::pow(t, monos[i].degree() + 2);
    EXPECT_NEAR(g.weights[static_cast<Eigen::Index>(i)], factor * f.weights[static_cast<Eigen::Index>(i)],
                1e-12 * (1.0 + std::abs(g.weights[static_cast<Eigen::Index>(i)])));
  }
}

TEST(BoxIntegralTest, ApplyIntegratesPolynomial) {
  const Box box = MakeBox({0.0, 0.0}, {1.0, 2.0});
  const auto f = box_integral_weights(box, monomial_basis(2, 2));
  const Polynomiald c = parse_polynomial("3 + x1*x2 - x2^2", {"x1", "x2"});
  // 3*2 + (1/2)(2) - (1)(8/3)
  EXPECT_NEAR(f.apply(c), 6.0 + 1.0 - 8.0 / 3.0, 1e-14);
}

TEST(MonteCarloTest, SinglePointAtOriginIsConstantIndicator) {
  const auto monos = monomial_basis(2, 3);
  const auto f = sample_mean_weights(Eigen::MatrixXd::Zero(2, 1), monos);
  for (std::size_t i = 0; i < monos.size(); ++i) {
    EXPECT_EQ(f.weights[static_cast<Eigen::Index>(i)], monos[i].degree() == 0 ? 1.0 : 0.0);
  }
}

TEST(MonteCarloTest, MatchesUnitSquareIntegral) {
  const auto f = monte_carlo_weights(MakeBox({0.0, 0.0}, {1.0, 1.0}), 1000000, 1, {Monomial({2, 1})});
  EXPECT_NEAR(f.weights[0], 1.0 / 6.0, 0.01 / 6.0);
}

TEST(MonteCarloTest, SameSeedIsBitIdentical) {
  const auto monos = monomial_basis(2, 4);
  const Box box = MakeBox({-1.0, -1.0}, {1.0, 1.0});
  const auto a = monte_carlo_weights(box, 5000, 77, monos), b = monte_carlo_weights(box, 5000, 77, monos);
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(a.n_samples, 5000);
  EXPECT_EQ(a.seed, 77u);
}

TEST(MonteCarloTest, SeedsAgreeWithinTwoPercent) {
  const auto monos = monomial_basis(2, 10);
  const Box box = MakeBox({-1.0, -1.0}, {1.0, 1.0});
  const auto a = monte_carlo_weights(box, 1000000, 1, monos), b = monte_carlo_weights(box, 1000000, 2, monos);
  for (std::size_t i = 0; i < monos.size(); ++i) {
    const double scale = testing_util::MonomialRms(box, monos[i]);
    EXPECT_LE(std::abs(a.weights[static_cast<Eigen::Index>(i)] - b.weights[static_cast<Eigen::Index>(i)]),
              0.02 * scale)
        << "monomial " << i;
  }
}

TEST(MonteCarloTest, ConvergesToBoxWeightsWithinOnePercent) {
  const auto monos = monomial_basis(2, 10);
  const Box box = MakeBox({-1.0, -1.0}, {1.0, 1.0});
  const double err = testing_util::MaxScaledDiscrepancy(box, monos, 1000000, 1);
  EXPECT_LE(err, 0.01);
}

TEST(MonteCarloTest, ReportedDiscrepancyMatchesDirectComparison) {
  const auto monos = monomial_basis(2, 6);
  const Box box = MakeBox({-1.0, -0.5}, {1.0, 2.0});
  const auto mc = monte_carlo_weights(box, 20000, 8, monos);
  EXPECT_NEAR(sampled_weight_discrepancy(mc, box), testing_util::MaxScaledDiscrepancy(box, monos, 20000, 8), 1e-12);
  EXPECT_EQ(sampled_weight_discrepancy(sample_mean_weights(Eigen::MatrixXd::Zero(2, 1), {Monomial({0, 0})}), box),
            0.0);
}

TEST(MonteCarloTest, ErrorShrinksLikeInverseSqrtN) {
  const auto monos = monomial_basis(2, 10);
  const Box box = MakeBox({-1.0, -1.0}, {1.0, 1.0});
  const double e3 = testing_util::RmsScaledDiscrepancy(box, monos, 1000, 3);
  const double e5 = testing_util::RmsScaledDiscrepancy(box, monos, 100000, 3);
  const double ratio = e3 / e5;
  EXPECT_GE(ratio, 10.0 / 3.0);
  EXPECT_LE(ratio, 10.0 * 3.0);
}

TEST(MonteCarloTest, RejectionSamplingStaysInRegion) {
  const SemiAlgebraicSet half({parse_polynomial("x1", {"x1", "x2"})});
  const auto f = monte_carlo_weights(MakeBox({-1.0, -1.0}, {1.0, 1.0}), 20000, 4, {Monomial({1, 0})}, &half);
  EXPECT_NEAR(f.weights[0], 0.5, 0.02);
}

TEST(MonteCarloTest, RejectsBadInput) {
  const Box box = MakeBox({-1.0}, {1.0});
  EXPECT_THROW(monte_carlo_weights(box, 0, 1, {Monomial(std::vector<int>{1})}), std::invalid_argument);
  EXPECT_THROW(monte_carlo_weights(box, 10, 1, {Monomial({1, 1})}), std::invalid_argument);
  EXPECT_THROW(box_integral_weights(MakeBox({1.0}, {-1.0}), {Monomial(std::vector<int>{1})}),
               std::invalid_argument);
}

}  // namespace
}  // namespace pdiff
