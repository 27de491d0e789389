#include "pdiff/pontryagin.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "pdiff/objective.hpp"

namespace pdiff {

std::string_view to_string(ConstraintOutcome outcome) {
  switch (outcome) {
    case ConstraintOutcome::kValid: return "valid";
    case ConstraintOutcome::kInvalidCertificate: return "invalid-certificate";
    case ConstraintOutcome::kSolverFailure: return "solver-failure";
  }
  return "unknown";
}

double PdiffResult::c_min(std::span<const double> x) const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& c : c_polys) m = std::min(m, evaluate(c, x));
  return m;
}

long long Grid::size() const {
  long long n = 1;
  for (int r : resolution) n *= r;
  return n;
}

Eigen::VectorXd Grid::point(long long index) const {
  const int n = box.dim();
  Eigen::VectorXd x(n);
  for (int k = n - 1; k >= 0; --k) {
    const int r = resolution[static_cast<std::size_t>(k)];
    const long long i = index % r;
    index /= r;
    x[k] = box.lower[k] + (static_cast<double>(i) + 0.5) * (box.upper[k] - box.lower[k]) / r;
  }
  return x;
}

double Grid::cell_volume() const {
  double v = 1.0;
  for (int k = 0; k < box.dim(); ++k) v *= (box.upper[k] - box.lower[k]) / resolution[static_cast<std::size_t>(k)];
  return v;
}

Grid make_grid(const Box& box, const std::vector<int>& resolution) {
  box.validate("grid");
  Grid g{box, resolution};
  if (resolution.size() == 1) g.resolution.assign(static_cast<std::size_t>(box.dim()), resolution.front());
  if (static_cast<int>(g.resolution.size()) != box.dim()) {
    throw std::invalid_argument("grid: resolution dimension mismatch");
  }
  for (int r : g.resolution) {
    if (r < 1) throw std::invalid_argument("grid: resolution must be positive");
  }
  return g;
}

std::vector<double> evaluate_region(const std::vector<Polynomiald>& c_polys, const Grid& grid) {
  std::vector<PolynomialEvaluator<double>> evals;
  for (const auto& c : c_polys) {
    if (c.nvars() != grid.box.dim()) throw std::invalid_argument("evaluate_region: dimension mismatch");
    evals.emplace_back(c);
  }
  std::vector<double> out(static_cast<std::size_t>(grid.size()));
  for (long long i = 0; i < grid.size(); ++i) {
    const Eigen::VectorXd x = grid.point(i);
    const std::span<const double> xs(x.data(), static_cast<std::size_t>(x.size()));
    double m = std::numeric_limits<double>::infinity();
    for (auto& e : evals) m = std::min(m, e(xs));
    out[static_cast<std::size_t>(i)] = m;
  }
  return out;
}

std::vector<double> evaluate_region(const PdiffResult& result, const Grid& grid) {
  return evaluate_region(result.c_polys, grid);
}

namespace {

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

std::vector<double> ToStd(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

// Maximum of p over a cell-centered grid of [-1, 1]^n with about `budget` points.
double SampledMax(const Polynomiald& p, int n, int budget) {
  const int per_axis = std::max(2, static_cast<int>(std::floor(std::pow(static_cast<double>(budget), 1.0 / n))));
  Box unit{Eigen::VectorXd::Constant(n, -1.0), Eigen::VectorXd::Constant(n, 1.0)};
  const std::vector<double> values = evaluate_region({p}, make_grid(unit, {per_axis}));
  double m = -std::numeric_limits<double>::infinity();
  for (double v : values) m = std::max(m, v);
  return m;
}

}  // namespace

PdiffResult compute_pdiff(const ProblemSpec& spec, const PdiffOptions& options) {
  return compute_pdiff(spec, options, nullptr);
}

PdiffResult compute_pdiff(const ProblemSpec& spec, const PdiffOptions& options, std::vector<SosProgram>* programs) {
  spec.validate();
  const auto t_start = std::chrono::steady_clock::now();
  const int n = spec.nvars();
  PdiffResult result;
  result.center = spec.region.center();
  result.half_width = spec.region.half_width();

  const Eigen::VectorXd origin = Eigen::VectorXd::Zero(n);
  if (!contains(spec.setB, origin, 0.0)) {
    result.warnings.push_back("B does not contain the origin; C is then not necessarily a subset of A");
  }
  if (options.containment_samples > 0) {
    const BoxCheckReport report =
        bounding_box_check(spec.setA, spec.region, options.containment_samples, spec.rng_seed);
    if (report.n_violations > 0) {
      std::ostringstream msg;
      msg << "region may not contain A: " << report.n_violations << " of " << report.n_samples
          << " samples just outside the region satisfy A";
      result.warnings.push_back(msg.str());
    }
  }

  // x = center + h .* u,  z = h .* w.
  const std::vector<double> center = ToStd(result.center), h = ToStd(result.half_width);
  const std::vector<double> zero(static_cast<std::size_t>(n), 0.0);
  std::vector<Polynomiald> b_scaled;
  for (const auto& b : spec.setB.constraints()) b_scaled.push_back(affine_substitute<double>(b, zero, h));
  const SemiAlgebraicSet B_scaled(b_scaled, spec.setB.name());
  Box z_box{spec.b_box.lower.cwiseQuotient(result.half_width), spec.b_box.upper.cwiseQuotient(result.half_width)};

  const Box unit{Eigen::VectorXd::Constant(n, -1.0), Eigen::VectorXd::Constant(n, 1.0)};
  const std::vector<Monomial> c_monomials = monomial_basis(n, spec.deg_c);
  const ObjectiveFunctional objective =
      spec.objective_mode == ObjectiveMode::kBoxIntegral
          ? box_integral_weights(unit, c_monomials)
          : monte_carlo_weights(unit, spec.n_samples, spec.rng_seed, c_monomials);
  if (objective.mode == ObjectiveMode::kMonteCarlo) {
    result.objective_weight_discrepancy = sampled_weight_discrepancy(objective, unit);
  }

  std::vector<double> inv_h(static_cast<std::size_t>(n)), back_offset(static_cast<std::size_t>(n));
  for (std::size_t k = 0; k < inv_h.size(); ++k) {
    inv_h[k] = 1.0 / h[k];
    back_offset[k] = -center[k] / h[k];
  }

  SdpOptions sdp_options = options.sdp;
  sdp_options.max_iters = spec.max_iters;
  sdp_options.gap_tol = spec.tolerances.sdp_gap;

  int n_failed = 0;
  result.sound = true;
  double c_min_max = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < spec.setA.constraints().size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    ConstraintStats st;
    Polynomiald c_out = Polynomiald::Constant(n, -1.0);
    Certificate cert;
    try {
      Polynomiald a_scaled = affine_substitute<double>(spec.setA.constraints()[i], center, h);
      const double a_max = max_abs_coefficient(a_scaled);
      if (a_max > 0.0) {
        st.a_scale = a_max;
        a_scaled *= 1.0 / a_max;
      }
      SosProgram prog =
          assemble(a_scaled, B_scaled, spec.deg_c, spec.deg_s, objective, spec.basis, spec.localize_region);
      st.block_dims = prog.sdp.block_dims;
      const SdpSolution sol = solve(prog.sdp, sdp_options);
      st.status = sol.status;
      st.iterations = sol.iterations;
      st.rows_before = sol.rows_before;
      st.rows_after = sol.rows_after;
      st.relative_gap = sol.relative_gap;
      if (sol.status == SolveStatus::kOptimal || sol.status == SolveStatus::kNearOptimal) {
        cert = reconstruct_residual(prog, a_scaled, B_scaled, sol.free_vars, sol.block_matrices, objective,
                                    spec.tolerances);
        st.residual_max = cert.residual_max;
        st.min_eigenvalue = std::numeric_limits<double>::infinity();
        for (double e : cert.min_eigenvalues) st.min_eigenvalue = std::min(st.min_eigenvalue, e);
        st.objective_value = cert.objective_value;
        const ShrinkResult shrunk = shrink_to_sound(cert, prog, z_box, spec.tolerances.shrink_epsilon_mode);
        st.epsilon = shrunk.epsilon;
        if (cert.valid && std::isfinite(shrunk.epsilon)) {
          st.outcome = ConstraintOutcome::kValid;
          st.max_c_over_region = SampledMax(shrunk.c, n, options.emptiness_samples);
          c_out = st.a_scale * affine_substitute<double>(shrunk.c, back_offset, inv_h);
        } else {
          st.outcome = ConstraintOutcome::kInvalidCertificate;
          st.message = "certificate check failed: residual " + std::to_string(cert.residual_max);
        }
      } else {
        st.outcome = ConstraintOutcome::kSolverFailure;
        st.message = std::string("solver status ") + std::string(to_string(sol.status));
      }
      if (programs) programs->push_back(std::move(prog));
    } catch (const std::exception& e) {
      st.outcome = ConstraintOutcome::kSolverFailure;
      st.message = e.what();
    }
    st.seconds = Seconds(t0);
    if (st.outcome != ConstraintOutcome::kValid) {
      result.sound = false;
      ++n_failed;
      st.max_c_over_region = -std::numeric_limits<double>::infinity();
      result.warnings.push_back("constraint " + std::to_string(i) + ": " + st.message +
                                "; C is reported as not sound");
    }
    result.empty_flags.push_back(st.max_c_over_region < 0.0);
    c_min_max = std::min(c_min_max, st.max_c_over_region);
    result.c_polys.push_back(std::move(c_out));
    result.certificates.push_back(std::move(cert));
    result.stats.push_back(std::move(st));
  }
  if (n_failed == static_cast<int>(spec.setA.constraints().size())) {
    result.failed = true;
    result.empty = true;
    result.seconds = Seconds(t_start);
    return result;
  }

  // Emptiness of the intersection, on the same sample grid as the per-constraint test.
  if (spec.setA.constraints().size() > 1) {
    const int per_axis =
        std::max(2, static_cast<int>(std::floor(std::pow(static_cast<double>(options.emptiness_samples), 1.0 / n))));
    const std::vector<double> v = evaluate_region(result.c_polys, make_grid(spec.region, {per_axis}));
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v) m = std::max(m, x);
    result.empty = m < 0.0;
  } else {
    result.empty = c_min_max < 0.0;
  }
  result.seconds = Seconds(t_start);
  return result;
}

}  // namespace pdiff
