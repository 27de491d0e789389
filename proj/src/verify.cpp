#include "pdiff/verify.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pdiff/random.hpp"

namespace pdiff {

std::vector<Eigen::VectorXd> sample_set(const SemiAlgebraicSet& set, const Box& box, int n, std::uint64_t seed,
                                        std::uint64_t stream) {
  box.validate("sample_set");
  if (box.dim() != set.nvars()) throw std::invalid_argument("sample_set: dimension mismatch");
  UniformStream rng(seed, stream);
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(std::max(n, 0)));
  long long attempts = 0;
  const long long max_attempts = 10000LL * std::max(n, 1) + 1000000LL;
  while (static_cast<int>(out.size()) < n) {
    if (++attempts > max_attempts) throw std::runtime_error("sample_set: rejection sampling found too few points");
    Eigen::VectorXd x = rng.point(box.lower, box.upper);
    if (contains(set, x)) out.push_back(std::move(x));
  }
  return out;
}

bool brute_force_pdiff_membership(const SemiAlgebraicSet& A, const Eigen::VectorXd& x,
                                  const std::vector<Eigen::VectorXd>& z_samples) {
  if (!contains(A, x)) return false;
  for (const auto& z : z_samples) {
    if (!contains(A, Eigen::VectorXd(x + z))) return false;
  }
  return true;
}

VerificationOptions default_verification_options(int dim, std::uint64_t seed) {
  VerificationOptions o;
  o.seed = seed;
  if (dim <= 2) {
    o.resolution = {400};
    o.n_z = 1000;
  } else {
    o.resolution = {60};
    o.n_z = 200;
  }
  return o;
}

namespace {

// Bound on the magnitude of the terms of p over the box `reach`.
double TermMagnitude(const Polynomiald& p, const Eigen::VectorXd& reach) {
  double total = 0.0;
  for (const auto& [m, c] : p.terms()) {
    double t = std::abs(c);
    for (int k = 0; k < m.nvars(); ++k) t *= std::pow(reach[k], m[k]);
    total += t;
  }
  return total;
}

}  // namespace

VerificationReport verify_result(const std::vector<Polynomiald>& c_polys, const ProblemSpec& spec,
                                 const VerificationOptions& options) {
  spec.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const int n = spec.nvars();
  const Grid grid = make_grid(spec.region, options.resolution.empty()
                                               ? default_verification_options(n).resolution
                                               : options.resolution);
  const std::vector<Eigen::VectorXd> zs = sample_set(spec.setB, spec.b_box, options.n_z, options.seed);

  VerificationReport rep;
  rep.resolution = grid.resolution;
  rep.n_grid = grid.size();
  rep.n_z_samples = options.n_z;
  rep.seed = options.seed;
  rep.worst_margin = std::numeric_limits<double>::infinity();

  Eigen::VectorXd reach(n);
  for (int k = 0; k < n; ++k) {
    reach[k] = std::max(std::abs(spec.region.lower[k]), std::abs(spec.region.upper[k])) +
               std::max(std::abs(spec.b_box.lower[k]), std::abs(spec.b_box.upper[k]));
  }
  double magnitude = 0.0;
  for (const auto& a : spec.setA.constraints()) magnitude = std::max(magnitude, TermMagnitude(a, reach));
  rep.sound_slack = 1e-9 * (1.0 + magnitude);

  std::vector<PolynomialEvaluator<double>> a_eval, c_eval;
  for (const auto& a : spec.setA.constraints()) a_eval.emplace_back(a);
  for (const auto& c : c_polys) {
    if (c.nvars() != n) throw std::invalid_argument("verify_result: c has the wrong arity");
    c_eval.emplace_back(c);
  }
  auto a_min = [&](const double* y) {
    const std::span<const double> ys(y, static_cast<std::size_t>(n));
    double m = std::numeric_limits<double>::infinity();
    for (auto& e : a_eval) m = std::min(m, e(ys));
    return m;
  };

  Eigen::VectorXd y(n);
  for (long long idx = 0; idx < grid.size(); ++idx) {
    const Eigen::VectorXd x = grid.point(idx);
    const std::span<const double> xs(x.data(), static_cast<std::size_t>(n));
    double cmin = std::numeric_limits<double>::infinity();
    for (auto& e : c_eval) cmin = std::min(cmin, e(xs));
    const bool in_c = cmin >= 0.0;

    // Margin min_{i,z} a_i(x+z); points outside C stop at the first negative value.
    double margin = a_min(x.data());
    for (const auto& z : zs) {
      if (!in_c && margin < 0.0) break;
      y = x + z;
      margin = std::min(margin, a_min(y.data()));
    }
    const bool in_brute = margin >= 0.0;
    rep.n_in_c += in_c;
    rep.n_in_brute += in_brute;
    if (in_c) {
      rep.n_c_not_brute += !in_brute;
      rep.worst_margin = std::min(rep.worst_margin, margin);
      if (margin < -rep.sound_slack) ++rep.soundness_violations;
    }
  }
  long long brute_not_c = 0;
  // |brute \ C| = |brute| - |brute ∩ C|.
  brute_not_c = rep.n_in_brute - (rep.n_in_c - rep.n_c_not_brute);
  rep.conservatism = rep.n_in_brute > 0 ? static_cast<double>(brute_not_c) / static_cast<double>(rep.n_in_brute) : 0.0;
  rep.area_ratio = rep.n_in_brute > 0 ? static_cast<double>(rep.n_in_c) / static_cast<double>(rep.n_in_brute) : 0.0;
  rep.area_c = static_cast<double>(rep.n_in_c) * grid.cell_volume();
  rep.area_brute = static_cast<double>(rep.n_in_brute) * grid.cell_volume();
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace pdiff
