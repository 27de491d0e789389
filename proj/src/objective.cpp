#include "pdiff/objective.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pdiff/random.hpp"

namespace pdiff {

namespace {

int MaxExponent(const std::vector<Monomial>& monomials) {
  int m = 0;
  for (const auto& mono : monomials) {
    for (int e : mono.exponents()) m = std::max(m, e);
  }
  return m;
}

void CheckArity(const std::vector<Monomial>& monomials, int n) {
  for (const auto& m : monomials) {
    if (m.nvars() != n) throw std::invalid_argument("objective: monomial arity mismatch");
  }
}

// Accumulates sum_j point_j^alpha for every monomial alpha.
class MomentAccumulator {
 public:
  MomentAccumulator(const std::vector<Monomial>& monomials, int n)
      : monomials_(monomials), n_(n), stride_(MaxExponent(monomials) + 1),
        powers_(static_cast<std::size_t>(n * stride_)),
        sums_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(monomials.size()))) {}

  void add(const double* x) {
    for (int k = 0; k < n_; ++k) {
      double* row = &powers_[static_cast<std::size_t>(k * stride_)];
      row[0] = 1.0;
      for (int e = 1; e < stride_; ++e) row[e] = row[e - 1] * x[k];
    }
    for (std::size_t i = 0; i < monomials_.size(); ++i) {
      double v = 1.0;
      for (int k = 0; k < n_; ++k) v *= powers_[static_cast<std::size_t>(k * stride_ + monomials_[i][k])];
      sums_[static_cast<Eigen::Index>(i)] += v;
    }
  }

  const Eigen::VectorXd& sums() const { return sums_; }

 private:
  const std::vector<Monomial>& monomials_;
  int n_;
  int stride_;
  std::vector<double> powers_;
  Eigen::VectorXd sums_;
};

}  // namespace

double ObjectiveFunctional::apply(const Polynomiald& c) const {
  double v = 0.0;
  for (std::size_t i = 0; i < monomials.size(); ++i) {
    v += weights[static_cast<Eigen::Index>(i)] * c.coefficient(monomials[i]);
  }
  return v;
}

ObjectiveFunctional box_integral_weights(const Box& box, const std::vector<Monomial>& monomials) {
  box.validate("box_integral_weights");
  const int n = box.dim();
  CheckArity(monomials, n);
  ObjectiveFunctional f;
  f.monomials = monomials;
  f.mode = ObjectiveMode::kBoxIntegral;
  f.weights.resize(static_cast<Eigen::Index>(monomials.size()));
  for (std::size_t i = 0; i < monomials.size(); ++i) {
    double w = 1.0;
    for (int k = 0; k < n; ++k) {
      const int e = monomials[i][k] + 1;
      w *= (std::pow(box.upper[k], e) - std::pow(box.lower[k], e)) / e;
    }
    f.weights[static_cast<Eigen::Index>(i)] = w;
  }
  return f;
}

ObjectiveFunctional monte_carlo_weights(const Box& box, int n, std::uint64_t seed,
                                        const std::vector<Monomial>& monomials,
                                        const SemiAlgebraicSet* region) {
  box.validate("monte_carlo_weights");
  if (n < 1) throw std::invalid_argument("monte_carlo_weights: need at least one sample");
  const int dim = box.dim();
  CheckArity(monomials, dim);
  if (region && region->nvars() != dim) throw std::invalid_argument("monte_carlo_weights: region arity mismatch");

  UniformStream rng(seed, 0x0b1ec7);
  MomentAccumulator acc(monomials, dim);
  long long accepted = 0, attempts = 0;
  const long long max_attempts = 1000LL * n + 1000000LL;
  while (accepted < n) {
    if (++attempts > max_attempts) throw std::runtime_error("monte_carlo_weights: sampler region looks empty");
    Eigen::VectorXd x = rng.point(box.lower, box.upper);
    if (region && !contains(*region, x)) continue;
    acc.add(x.data());
    ++accepted;
  }
  ObjectiveFunctional f;
  f.monomials = monomials;
  f.mode = ObjectiveMode::kMonteCarlo;
  f.n_samples = n;
  f.seed = seed;
  f.weights = acc.sums() / static_cast<double>(n);
  return f;
}

ObjectiveFunctional sample_mean_weights(const Eigen::MatrixXd& points, const std::vector<Monomial>& monomials) {
  if (points.cols() < 1) throw std::invalid_argument("sample_mean_weights: need at least one point");
  const int dim = static_cast<int>(points.rows());
  CheckArity(monomials, dim);
  MomentAccumulator acc(monomials, dim);
  for (Eigen::Index j = 0; j < points.cols(); ++j) {
    Eigen::VectorXd x = points.col(j);
    acc.add(x.data());
  }
  ObjectiveFunctional f;
  f.monomials = monomials;
  f.mode = ObjectiveMode::kMonteCarlo;
  f.n_samples = static_cast<int>(points.cols());
  f.weights = acc.sums() / static_cast<double>(points.cols());
  return f;
}

double sampled_weight_discrepancy(const ObjectiveFunctional& sampled, const Box& box) {
  const ObjectiveFunctional exact = box_integral_weights(box, sampled.monomials);
  std::vector<Monomial> squares;
  for (const Monomial& m : sampled.monomials) {
    std::vector<int> e(m.exponents());
    for (int& v : e) v *= 2;
    squares.emplace_back(e);
  }
  const ObjectiveFunctional second = box_integral_weights(box, squares);
  const double vol = box.volume();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < exact.weights.size(); ++i) {
    const double mean = exact.weights[i] / vol;
    const double scale = mean != 0.0 ? std::abs(mean) : std::sqrt(second.weights[i] / vol);
    worst = std::max(worst, std::abs(sampled.weights[i] - mean) / scale);
  }
  return worst;
}

}  // namespace pdiff
