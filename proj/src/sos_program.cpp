#include "pdiff/sos_program.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace pdiff {

namespace {

// Phase-one simplex with Bland's rule: is `target` a convex combination of
// the columns of `points`?
bool InConvexHull(const Eigen::MatrixXd& points, const Eigen::VectorXd& target) {
  const auto n = points.rows();
  const auto N = points.cols();
  const auto r = n + 1;
  const auto cols = N + r;
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(r, cols + 1);
  T.topLeftCorner(n, N) = points;
  T.row(n).head(N).setOnes();
  T.block(0, N, r, r).setIdentity();
  T.col(cols).head(n) = target;
  T(n, cols) = 1.0;
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(r));
  for (Eigen::Index i = 0; i < r; ++i) basis[static_cast<std::size_t>(i)] = N + i;
  Eigen::RowVectorXd z = Eigen::RowVectorXd::Zero(cols + 1);
  z.head(N) = -T.topLeftCorner(r, N).colwise().sum();
  z[cols] = -T.col(cols).sum();

  constexpr double kTol = 1e-9;
  for (int iter = 0; iter < 100000; ++iter) {
    Eigen::Index enter = -1;
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (z[j] < -kTol) {
        enter = j;
        break;
      }
    }
    if (enter < 0) break;
    Eigen::Index leave = -1;
    double best = 0.0;
    for (Eigen::Index i = 0; i < r; ++i) {
      if (T(i, enter) <= kTol) continue;
      const double ratio = T(i, cols) / T(i, enter);
      if (leave < 0 || ratio < best - 1e-12 ||
          (ratio <= best + 1e-12 && basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
        leave = i;
        best = ratio;
      }
    }
    if (leave < 0) break;
    T.row(leave) /= T(leave, enter);
    for (Eigen::Index i = 0; i < r; ++i) {
      if (i != leave && T(i, enter) != 0.0) T.row(i) -= T(i, enter) * T.row(leave);
    }
    z -= z[enter] * T.row(leave);
    basis[static_cast<std::size_t>(leave)] = enter;
  }
  return -z[cols] <= 1e-7;
}

Monomial Doubled(const Monomial& m) { return m * m; }

Monomial EmbedX(const Monomial& m, const VariableSplit& split) {
  std::vector<int> e(static_cast<std::size_t>(split.joint()), 0);
  for (int k = 0; k < split.nx; ++k) e[static_cast<std::size_t>(k)] = m[k];
  return Monomial(std::move(e));
}

// 1 - x_k^2 over n variables.
Polynomiald UnitInterval(int n, int k) {
  return Polynomiald::Constant(n, 1.0) - Polynomiald::Variable(n, k) * Polynomiald::Variable(n, k);
}

}  // namespace

int identity_degree(const Polynomiald& a, const SemiAlgebraicSet& B, int deg_c, int deg_s) {
  int d = std::max(a.degree(), deg_c);
  d = std::max(d, deg_s + B.max_degree());
  return d % 2 == 0 ? d : d + 1;
}

std::vector<Monomial> newton_reduce(const std::vector<Monomial>& candidates, const std::vector<Monomial>& support) {
  if (support.empty()) return {};
  const int n = support.front().nvars();
  const std::set<Monomial> support_set(support.begin(), support.end());
  Eigen::MatrixXd points(n, static_cast<Eigen::Index>(support_set.size()));
  {
    Eigen::Index j = 0;
    for (const auto& m : support_set) {
      for (int k = 0; k < n; ++k) points(k, j) = m[k];
      ++j;
    }
  }
  // Cheap separating directions: coordinates, their negatives, total degree.
  std::vector<Eigen::VectorXd> directions;
  for (int k = 0; k < n; ++k) {
    directions.push_back(Eigen::VectorXd::Unit(n, k));
    directions.push_back(-Eigen::VectorXd::Unit(n, k));
  }
  directions.push_back(Eigen::VectorXd::Ones(n));
  directions.push_back(-Eigen::VectorXd::Ones(n));
  std::vector<double> support_max;
  for (const auto& v : directions) support_max.push_back((v.transpose() * points).maxCoeff());

  std::vector<Monomial> kept;
  for (const auto& m : candidates) {
    const Monomial m2 = Doubled(m);
    if (support_set.count(m2)) {
      kept.push_back(m);
      continue;
    }
    Eigen::VectorXd t(n);
    for (int k = 0; k < n; ++k) t[k] = m2[k];
    bool separated = false;
    for (std::size_t d = 0; d < directions.size() && !separated; ++d) {
      separated = directions[d].dot(t) > support_max[d] + 1e-9;
    }
    if (!separated && InConvexHull(points, t)) kept.push_back(m);
  }

  // A diagonal entry whose monomial 2m has no other source must vanish, and
  // then its whole row and column vanish in a PSD matrix.
  bool changed = true;
  while (changed) {
    changed = false;
    const std::set<Monomial> kept_set(kept.begin(), kept.end());
    std::vector<Monomial> next;
    for (const auto& m : kept) {
      const Monomial m2 = Doubled(m);
      bool ok = support_set.count(m2) > 0;
      for (const auto& m1 : kept) {
        if (ok) break;
        if (m1 == m) continue;
        std::vector<int> e(static_cast<std::size_t>(n));
        bool nonneg = true;
        for (int k = 0; k < n && nonneg; ++k) {
          e[static_cast<std::size_t>(k)] = m2[k] - m1[k];
          nonneg = e[static_cast<std::size_t>(k)] >= 0;
        }
        if (nonneg && kept_set.count(Monomial(std::move(e)))) ok = true;
      }
      if (ok) {
        next.push_back(m);
      } else {
        changed = true;
      }
    }
    kept = std::move(next);
  }
  return kept;
}

SosProgram assemble(const Polynomiald& a, const SemiAlgebraicSet& B, int deg_c, int deg_s,
                    const ObjectiveFunctional& objective, GramBasis basis, bool localize_region) {
  const int n = a.nvars();
  if (B.nvars() != n) throw std::invalid_argument("assemble: a and B have different arity");
  if (deg_c < 0 || deg_s < 0) throw std::invalid_argument("assemble: degrees must be non-negative");
  if (a.is_zero()) throw std::invalid_argument("assemble: a is the zero polynomial");

  SosProgram prog;
  prog.split = VariableSplit{n, n};
  const int J = prog.split.joint();
  prog.degrees = {deg_c, deg_s, identity_degree(a, B, deg_c, deg_s)};
  prog.a_shifted = shift_compose(a, prog.split);
  for (const auto& b : B.constraints()) prog.b_embedded.push_back(embed(b, prog.split, Block::kZ));
  if (localize_region) {
    prog.degrees.identity_degree = std::max(prog.degrees.identity_degree, deg_s + 2 + (deg_s % 2));
    for (int k = 0; k < n; ++k) prog.region_embedded.push_back(embed(UnitInterval(n, k), prog.split, Block::kX));
  }
  // Multiplier polynomials in block order: b_j, then the region constraints.
  std::vector<const Polynomiald*> mult_polys;
  for (const auto& b : prog.b_embedded) mult_polys.push_back(&b);
  for (const auto& r : prog.region_embedded) mult_polys.push_back(&r);
  prog.c_monomials = monomial_basis(n, deg_c);

  const std::vector<Monomial> mult_basis = monomial_basis(J, deg_s / 2);
  std::vector<Monomial> identity_basis = monomial_basis(J, prog.degrees.identity_degree / 2);
  if (basis == GramBasis::kNewton) {
    std::set<Monomial> support;
    for (const auto& [m, c] : prog.a_shifted.terms()) support.insert(m);
    for (const auto& m : prog.c_monomials) support.insert(EmbedX(m, prog.split));
    const std::vector<Monomial> products = monomial_basis(J, 2 * (deg_s / 2));
    for (const Polynomiald* g_poly : mult_polys) {
      for (const auto& [g, c] : g_poly->terms()) {
        for (const auto& m : products) support.insert(m * g);
      }
    }
    identity_basis = newton_reduce(identity_basis, std::vector<Monomial>(support.begin(), support.end()));
  }

  prog.blocks.push_back({identity_basis, BlockRole::kIdentity, -1});
  for (std::size_t j = 0; j < prog.b_embedded.size(); ++j) {
    prog.blocks.push_back({mult_basis, BlockRole::kMultiplier, static_cast<int>(j)});
  }
  for (std::size_t k = 0; k < prog.region_embedded.size(); ++k) {
    prog.blocks.push_back({mult_basis, BlockRole::kRegionMultiplier, static_cast<int>(k)});
  }

  // Collect (monomial, block, i, j, value) contributions, then number rows.
  struct Contribution {
    Monomial mono;
    int block, i, j;
    double value;
  };
  std::vector<Contribution> contributions;
  std::set<Monomial> row_set;
  for (const auto& [m, c] : prog.a_shifted.terms()) row_set.insert(m);
  for (int q = 0; q < prog.blocks[0].dim(); ++q) {
    for (int p = 0; p <= q; ++p) {
      Monomial mono = identity_basis[static_cast<std::size_t>(p)] * identity_basis[static_cast<std::size_t>(q)];
      row_set.insert(mono);
      contributions.push_back({std::move(mono), 0, p, q, 1.0});
    }
  }
  for (std::size_t jb = 0; jb < mult_polys.size(); ++jb) {
    const int block = static_cast<int>(jb) + 1;
    for (int q = 0; q < static_cast<int>(mult_basis.size()); ++q) {
      for (int p = 0; p <= q; ++p) {
        const Monomial pq = mult_basis[static_cast<std::size_t>(p)] * mult_basis[static_cast<std::size_t>(q)];
        for (const auto& [g, c] : mult_polys[jb]->terms()) {
          Monomial mono = pq * g;
          row_set.insert(mono);
          contributions.push_back({std::move(mono), block, p, q, c});
        }
      }
    }
  }
  std::vector<Monomial> c_joint;
  for (const auto& m : prog.c_monomials) {
    c_joint.push_back(EmbedX(m, prog.split));
    row_set.insert(c_joint.back());
  }

  prog.row_monomials.assign(row_set.begin(), row_set.end());
  std::map<Monomial, int> row_of;
  for (std::size_t r = 0; r < prog.row_monomials.size(); ++r) {
    row_of.emplace(prog.row_monomials[r], static_cast<int>(r));
  }

  SdpProblem& sdp = prog.sdp;
  sdp.n_rows = static_cast<int>(prog.row_monomials.size());
  sdp.n_free = static_cast<int>(prog.c_monomials.size());
  for (const auto& b : prog.blocks) sdp.block_dims.push_back(b.dim());
  std::vector<char> covered(static_cast<std::size_t>(sdp.n_rows), 0);
  for (const auto& ct : contributions) {
    const int row = row_of.at(ct.mono);
    sdp.block_entries.push_back({row, ct.block, ct.i, ct.j, ct.value});
    covered[static_cast<std::size_t>(row)] = 1;
  }
  for (std::size_t k = 0; k < c_joint.size(); ++k) {
    const int row = row_of.at(c_joint[k]);
    sdp.free_entries.push_back({row, static_cast<int>(k), 1.0});
    covered[static_cast<std::size_t>(row)] = 1;
  }
  sdp.rhs = Eigen::VectorXd::Zero(sdp.n_rows);
  for (const auto& [m, c] : prog.a_shifted.terms()) {
    const int row = row_of.at(m);
    if (!covered[static_cast<std::size_t>(row)]) {
      throw DegreeBookkeepingError("assemble: a(x+z) has a monomial of degree " + std::to_string(m.degree()) +
                                   " that no Gram entry or coefficient of c can match; raise deg_c or deg_s");
    }
    sdp.rhs[row] = c;
  }
  if (sdp.block_dims.front() == 0) throw DegreeBookkeepingError("assemble: identity Gram basis is empty");

  std::map<Monomial, double> weight_of;
  for (std::size_t k = 0; k < objective.monomials.size(); ++k) {
    weight_of[objective.monomials[k]] += objective.weights[static_cast<Eigen::Index>(k)];
  }
  sdp.objective = Eigen::VectorXd::Zero(sdp.n_free);
  for (std::size_t k = 0; k < prog.c_monomials.size(); ++k) {
    const auto it = weight_of.find(prog.c_monomials[k]);
    if (it != weight_of.end()) sdp.objective[static_cast<Eigen::Index>(k)] = it->second;
  }
  sdp.validate();
  return prog;
}

Polynomiald gram_polynomial(const std::vector<Monomial>& basis, const Eigen::MatrixXd& Q, int nvars) {
  if (Q.rows() != static_cast<Eigen::Index>(basis.size()) || Q.cols() != Q.rows()) {
    throw std::invalid_argument("gram_polynomial: matrix size does not match basis");
  }
  Polynomiald::TermMap terms;
  for (std::size_t q = 0; q < basis.size(); ++q) {
    for (std::size_t p = 0; p < basis.size(); ++p) {
      terms[basis[p] * basis[q]] += Q(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q));
    }
  }
  return Polynomiald(nvars, std::move(terms));
}

Certificate reconstruct_residual(const SosProgram& program, const Polynomiald& a, const SemiAlgebraicSet& B,
                                 const Eigen::VectorXd& c_coeffs, const std::vector<Eigen::MatrixXd>& gram,
                                 const ObjectiveFunctional& objective, const ToleranceSet& tolerances) {
  if (gram.size() != program.blocks.size()) throw std::invalid_argument("reconstruct_residual: block count mismatch");
  if (c_coeffs.size() != static_cast<Eigen::Index>(program.c_monomials.size())) {
    throw std::invalid_argument("reconstruct_residual: coefficient count mismatch");
  }
  if (B.constraints().size() + 1 + program.region_embedded.size() != program.blocks.size()) {
    throw std::invalid_argument("reconstruct_residual: B does not match the program");
  }
  const VariableSplit& split = program.split;
  const int J = split.joint();

  Certificate cert;
  cert.gram_matrices = gram;
  cert.c_coeffs = c_coeffs;
  Polynomiald::TermMap c_terms;
  for (std::size_t k = 0; k < program.c_monomials.size(); ++k) {
    c_terms[program.c_monomials[k]] = c_coeffs[static_cast<Eigen::Index>(k)];
  }
  cert.c = Polynomiald(split.nx, std::move(c_terms));

  Polynomiald residual = shift_compose(a, split) - embed(cert.c, split, Block::kX);
  for (std::size_t j = 0; j < B.constraints().size(); ++j) {
    Polynomiald s = gram_polynomial(program.blocks[j + 1].basis, gram[j + 1], J);
    residual -= s * embed(B.constraints()[j], split, Block::kZ);
    cert.multipliers.push_back(std::move(s));
  }
  for (std::size_t k = 0; k < program.region_embedded.size(); ++k) {
    const std::size_t block = B.constraints().size() + 1 + k;
    Polynomiald r = gram_polynomial(program.blocks[block].basis, gram[block], J);
    residual -= r * embed(UnitInterval(split.nx, static_cast<int>(k)), split, Block::kX);
    cert.multipliers.push_back(std::move(r));
  }
  residual -= gram_polynomial(program.blocks[0].basis, gram[0], J);
  cert.residual_max = max_abs_coefficient(residual);
  cert.residual = std::move(residual);

  bool psd = true;
  for (const auto& Q : gram) {
    const double lmin = Q.rows() == 0 ? 0.0
                                      : Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Q, Eigen::EigenvaluesOnly)
                                            .eigenvalues()(0);
    cert.min_eigenvalues.push_back(lmin);
    psd = psd && lmin >= -tolerances.psd_margin;
  }
  cert.objective_value = objective.apply(cert.c);
  cert.valid = psd && cert.residual_max <= tolerances.residual_max && std::isfinite(cert.residual_max);
  return cert;
}

double monomial_bound(const Monomial& m, int nx, const Box& z_box) {
  double u = 1.0;
  for (int k = 0; k < z_box.dim(); ++k) {
    const double r = std::max(std::abs(z_box.lower[k]), std::abs(z_box.upper[k]));
    u *= std::pow(r, m[nx + k]);
  }
  return u;
}

ShrinkResult shrink_to_sound(const Certificate& cert, const SosProgram& program, const Box& z_box, ShrinkMode mode) {
  ShrinkResult out;
  out.c = cert.c;
  if (mode == ShrinkMode::kOff) return out;
  if (z_box.dim() != program.split.nz) throw std::invalid_argument("shrink_to_sound: z box dimension mismatch");
  const int nx = program.split.nx;

  double row_bound = 0.0;
  for (const auto& m : program.row_monomials) row_bound += monomial_bound(m, nx, z_box);
  double eps = cert.residual_max * row_bound;

  for (std::size_t k = 0; k < program.blocks.size(); ++k) {
    const double neg = std::max(0.0, -cert.min_eigenvalues[k]);
    if (neg == 0.0) continue;
    double basis_bound = 0.0;
    for (const auto& m : program.blocks[k].basis) basis_bound += std::pow(monomial_bound(m, nx, z_box), 2);
    double factor = 1.0;
    const GramBlock& blk = program.blocks[k];
    if (blk.role != BlockRole::kIdentity) {
      const auto& g_poly = blk.role == BlockRole::kMultiplier
                               ? program.b_embedded[static_cast<std::size_t>(blk.multiplier_index)]
                               : program.region_embedded[static_cast<std::size_t>(blk.multiplier_index)];
      factor = 0.0;
      for (const auto& [g, c] : g_poly.terms()) factor += std::abs(c) * monomial_bound(g, nx, z_box);
    }
    eps += neg * basis_bound * factor;
  }
  if (!std::isfinite(eps)) eps = std::numeric_limits<double>::infinity();
  out.epsilon = eps;
  if (std::isfinite(eps)) out.c = cert.c - Polynomiald::Constant(nx, eps);
  return out;
}

}  // namespace pdiff
