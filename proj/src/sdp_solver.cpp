#include "pdiff/sdp_solver.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <deque>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace pdiff {

std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kNearOptimal: return "near-optimal";
    case SolveStatus::kMaxIterations: return "max-iterations";
    case SolveStatus::kInfeasible: return "infeasible-detected";
    case SolveStatus::kUnbounded: return "unbounded-detected";
    case SolveStatus::kNumericalFailure: return "numerical-failure";
  }
  return "unknown";
}

void SdpProblem::validate() const {
  if (n_rows < 0 || n_free < 0) throw std::invalid_argument("SdpProblem: negative size");
  if (rhs.size() != n_rows) throw std::invalid_argument("SdpProblem: rhs size does not match row count");
  if (objective.size() != n_free) throw std::invalid_argument("SdpProblem: objective size does not match free count");
  for (int d : block_dims) {
    if (d <= 0) throw std::invalid_argument("SdpProblem: block dimension must be positive");
  }
  for (const auto& e : block_entries) {
    if (e.row < 0 || e.row >= n_rows || e.block < 0 || e.block >= static_cast<int>(block_dims.size())) {
      throw std::invalid_argument("SdpProblem: block entry index out of range");
    }
    const int n = block_dims[static_cast<std::size_t>(e.block)];
    if (e.i < 0 || e.j < e.i || e.j >= n) {
      throw std::invalid_argument("SdpProblem: block entry must satisfy 0 <= i <= j < dim");
    }
  }
  for (const auto& e : free_entries) {
    if (e.row < 0 || e.row >= n_rows || e.var < 0 || e.var >= n_free) {
      throw std::invalid_argument("SdpProblem: free entry index out of range");
    }
  }
}

Eigen::VectorXd SdpProblem::apply(const std::vector<Eigen::MatrixXd>& blocks, const Eigen::VectorXd& free_vars) const {
  if (blocks.size() != block_dims.size() || free_vars.size() != n_free) {
    throw std::invalid_argument("SdpProblem::apply: dimension mismatch");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n_rows);
  for (const auto& e : block_entries) {
    const auto& X = blocks[static_cast<std::size_t>(e.block)];
    out[e.row] += e.i == e.j ? e.value * X(e.i, e.i) : e.value * (X(e.i, e.j) + X(e.j, e.i));
  }
  for (const auto& e : free_entries) out[e.row] += e.value * free_vars[e.var];
  return out;
}

// ---------------------------------------------------------------------------
// Preprocessing

PreprocessedProblem preprocess(const SdpProblem& problem) {
  problem.validate();
  const int m = problem.n_rows;

  // Variable ids: packed block entries first, then free variables.
  std::vector<long long> block_offset(problem.block_dims.size() + 1, 0);
  for (std::size_t k = 0; k < problem.block_dims.size(); ++k) {
    const long long n = problem.block_dims[k];
    block_offset[k + 1] = block_offset[k] + n * (n + 1) / 2;
  }
  const long long n_block_vars = block_offset.back();
  auto pack = [](int i, int j) { return static_cast<long long>(j) * (j + 1) / 2 + i; };

  // Row -> (variable, coefficient as a functional on independent variables).
  std::vector<std::vector<std::pair<long long, double>>> rows(static_cast<std::size_t>(m));
  for (const auto& e : problem.block_entries) {
    rows[static_cast<std::size_t>(e.row)].emplace_back(block_offset[static_cast<std::size_t>(e.block)] + pack(e.i, e.j),
                                                       e.i == e.j ? e.value : 2.0 * e.value);
  }
  for (const auto& e : problem.free_entries) {
    rows[static_cast<std::size_t>(e.row)].emplace_back(n_block_vars + e.var, e.value);
  }
  for (auto& r : rows) {
    std::sort(r.begin(), r.end());
    std::vector<std::pair<long long, double>> merged;
    for (const auto& [v, c] : r) {
      if (!merged.empty() && merged.back().first == v) {
        merged.back().second += c;
      } else {
        merged.emplace_back(v, c);
      }
    }
    std::erase_if(merged, [](const auto& vc) { return vc.second == 0.0; });
    r = std::move(merged);
  }

  // Peel rows that own a variable no other active row uses.
  std::vector<int> count(static_cast<std::size_t>(n_block_vars + problem.n_free), 0);
  for (const auto& r : rows) {
    for (const auto& [v, c] : r) ++count[static_cast<std::size_t>(v)];
  }
  std::vector<char> active(static_cast<std::size_t>(m), 1);
  std::vector<std::vector<int>> rows_of_var(count.size());
  for (int i = 0; i < m; ++i) {
    for (const auto& [v, c] : rows[static_cast<std::size_t>(i)]) rows_of_var[static_cast<std::size_t>(v)].push_back(i);
  }
  auto owns = [&](int i) {
    for (const auto& [v, c] : rows[static_cast<std::size_t>(i)]) {
      if (count[static_cast<std::size_t>(v)] == 1) return true;
    }
    return false;
  };
  std::deque<int> queue;
  for (int i = 0; i < m; ++i) {
    if (owns(i)) queue.push_back(i);
  }
  while (!queue.empty()) {
    const int i = queue.front();
    queue.pop_front();
    if (!active[static_cast<std::size_t>(i)]) continue;
    active[static_cast<std::size_t>(i)] = 0;
    for (const auto& [v, c] : rows[static_cast<std::size_t>(i)]) {
      if (--count[static_cast<std::size_t>(v)] == 1) {
        for (int r : rows_of_var[static_cast<std::size_t>(v)]) {
          if (active[static_cast<std::size_t>(r)]) queue.push_back(r);
        }
      }
    }
  }

  // Gram-Schmidt over the remaining core, in row order.
  std::vector<char> keep(static_cast<std::size_t>(m), 1);
  bool inconsistent = false;
  std::vector<int> core;
  for (int i = 0; i < m; ++i) {
    if (active[static_cast<std::size_t>(i)]) core.push_back(i);
  }
  if (!core.empty()) {
    std::vector<long long> vars;
    for (int i : core) {
      for (const auto& [v, c] : rows[static_cast<std::size_t>(i)]) vars.push_back(v);
    }
    std::sort(vars.begin(), vars.end());
    vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
    const auto dim = static_cast<Eigen::Index>(vars.size());
    std::vector<Eigen::VectorXd> basis;
    std::vector<double> basis_rhs;
    for (int i : core) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
      for (const auto& [var, c] : rows[static_cast<std::size_t>(i)]) {
        v[std::lower_bound(vars.begin(), vars.end(), var) - vars.begin()] = c;
      }
      double beta = problem.rhs[i];
      const double norm0 = v.norm();
      const double beta0 = std::abs(beta);
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t k = 0; k < basis.size(); ++k) {
          const double coef = basis[k].dot(v);
          v -= coef * basis[k];
          beta -= coef * basis_rhs[k];
        }
      }
      const double norm = v.norm();
      if (norm <= 1e-10 * norm0) {
        keep[static_cast<std::size_t>(i)] = 0;
        if (std::abs(beta) > 1e-8 * (1.0 + beta0)) inconsistent = true;
      } else {
        basis.push_back(v / norm);
        basis_rhs.push_back(beta / norm);
      }
    }
  }

  PreprocessedProblem out;
  out.inconsistent = inconsistent;
  std::vector<int> new_index(static_cast<std::size_t>(m), -1);
  for (int i = 0; i < m; ++i) {
    if (keep[static_cast<std::size_t>(i)]) {
      new_index[static_cast<std::size_t>(i)] = static_cast<int>(out.kept_rows.size());
      out.kept_rows.push_back(i);
    } else {
      out.removed_rows.push_back(i);
    }
  }
  SdpProblem& r = out.problem;
  r.block_dims = problem.block_dims;
  r.n_free = problem.n_free;
  r.objective = problem.objective;
  r.n_rows = static_cast<int>(out.kept_rows.size());
  r.rhs.resize(r.n_rows);
  for (int i = 0; i < r.n_rows; ++i) r.rhs[i] = problem.rhs[out.kept_rows[static_cast<std::size_t>(i)]];
  for (auto e : problem.block_entries) {
    e.row = new_index[static_cast<std::size_t>(e.row)];
    if (e.row >= 0) r.block_entries.push_back(e);
  }
  for (auto e : problem.free_entries) {
    e.row = new_index[static_cast<std::size_t>(e.row)];
    if (e.row >= 0) r.free_entries.push_back(e);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Interior-point iterations

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double Inner(const MatrixXd& a, const MatrixXd& b) { return a.cwiseProduct(b).sum(); }

MatrixXd Sym(const MatrixXd& a) { return 0.5 * (a + a.transpose()); }

// Sparsity pattern of one block across all rows, grouped by packed entry.
struct BlockPattern {
  int n = 0;
  std::vector<int> entry_p, entry_q;  // packed entry -> (p, q), p <= q
  std::vector<int> offsets;           // CSR over packed entries
  std::vector<int> rows;
  std::vector<double> coefs;          // raw symmetric coefficient
  std::vector<double> functional;     // coefficient of X_pq as an independent variable
  std::vector<int> entry_of;          // nnz -> packed entry

  int npack() const { return static_cast<int>(entry_p.size()); }
};

std::vector<BlockPattern> BuildPatterns(const SdpProblem& prob) {
  std::vector<BlockPattern> patterns(prob.block_dims.size());
  std::vector<std::vector<std::vector<std::pair<int, double>>>> lists(prob.block_dims.size());
  for (std::size_t k = 0; k < prob.block_dims.size(); ++k) {
    const int n = prob.block_dims[k];
    patterns[k].n = n;
    for (int q = 0; q < n; ++q) {
      for (int p = 0; p <= q; ++p) {
        patterns[k].entry_p.push_back(p);
        patterns[k].entry_q.push_back(q);
      }
    }
    lists[k].resize(patterns[k].entry_p.size());
  }
  for (const auto& e : prob.block_entries) {
    const long long idx = static_cast<long long>(e.j) * (e.j + 1) / 2 + e.i;
    lists[static_cast<std::size_t>(e.block)][static_cast<std::size_t>(idx)].emplace_back(e.row, e.value);
  }
  for (std::size_t k = 0; k < patterns.size(); ++k) {
    auto& pat = patterns[k];
    pat.offsets.push_back(0);
    for (int e = 0; e < pat.npack(); ++e) {
      auto& l = lists[k][static_cast<std::size_t>(e)];
      std::sort(l.begin(), l.end());
      for (std::size_t t = 0; t < l.size(); ++t) {
        if (t + 1 < l.size() && l[t + 1].first == l[t].first) {
          l[t + 1].second += l[t].second;
          continue;
        }
        pat.rows.push_back(l[t].first);
        pat.coefs.push_back(l[t].second);
        pat.functional.push_back(pat.entry_p[static_cast<std::size_t>(e)] == pat.entry_q[static_cast<std::size_t>(e)]
                                     ? l[t].second
                                     : 2.0 * l[t].second);
        pat.entry_of.push_back(e);
      }
      pat.offsets.push_back(static_cast<int>(pat.rows.size()));
    }
  }
  return patterns;
}

struct NtScaling {
  Eigen::LLT<MatrixXd> chol_x, chol_s;
  MatrixXd G, G_inv, W;
  VectorXd d;
};

// Internal form: maximize <C, X> + w.y + constant subject to A(X) + B y = b.
// Dual slack S = A*(u) - C.
class InteriorPoint {
 public:
  InteriorPoint(const SdpProblem& prob, const std::vector<MatrixXd>& C, double constant, const SdpOptions& opts)
      : prob_(prob),
        C_(C),
        constant_(constant),
        opts_(opts),
        patterns_(BuildPatterns(prob)),
        m_(prob.n_rows),
        f_(prob.n_free) {
    B_ = MatrixXd::Zero(m_, f_);
    for (const auto& e : prob.free_entries) B_(e.row, e.var) += e.value;
    for (int d : prob.block_dims) total_dim_ += d;
  }

  SdpSolution Run();

 private:
  VectorXd ApplyA(const std::vector<MatrixXd>& X) const {
    VectorXd out = VectorXd::Zero(m_);
    for (std::size_t k = 0; k < patterns_.size(); ++k) {
      const auto& pat = patterns_[k];
      for (int e = 0; e < pat.npack(); ++e) {
        const double x = X[k](pat.entry_p[static_cast<std::size_t>(e)], pat.entry_q[static_cast<std::size_t>(e)]);
        for (int t = pat.offsets[static_cast<std::size_t>(e)]; t < pat.offsets[static_cast<std::size_t>(e) + 1]; ++t) {
          out[pat.rows[static_cast<std::size_t>(t)]] += pat.functional[static_cast<std::size_t>(t)] * x;
        }
      }
    }
    return out;
  }

  std::vector<MatrixXd> ApplyAdjoint(const VectorXd& u) const {
    std::vector<MatrixXd> out;
    for (const auto& pat : patterns_) {
      MatrixXd S = MatrixXd::Zero(pat.n, pat.n);
      for (int e = 0; e < pat.npack(); ++e) {
        double v = 0.0;
        for (int t = pat.offsets[static_cast<std::size_t>(e)]; t < pat.offsets[static_cast<std::size_t>(e) + 1]; ++t) {
          v += pat.coefs[static_cast<std::size_t>(t)] * u[pat.rows[static_cast<std::size_t>(t)]];
        }
        const int p = pat.entry_p[static_cast<std::size_t>(e)], q = pat.entry_q[static_cast<std::size_t>(e)];
        S(p, q) = v;
        S(q, p) = v;
      }
      out.push_back(std::move(S));
    }
    return out;
  }

  bool ComputeScaling(const MatrixXd& X, const MatrixXd& S, NtScaling& sc) const {
    sc.chol_x.compute(X);
    sc.chol_s.compute(S);
    if (sc.chol_x.info() != Eigen::Success || sc.chol_s.info() != Eigen::Success) return false;
    const MatrixXd L = sc.chol_x.matrixL();
    const MatrixXd R = sc.chol_s.matrixL();
    const MatrixXd RtL = R.transpose() * L;
    Eigen::BDCSVD<MatrixXd> svd(RtL, Eigen::ComputeFullU | Eigen::ComputeFullV);
    sc.d = svd.singularValues();
    if (!(sc.d.minCoeff() > 0.0)) return false;
    const MatrixXd& V = svd.matrixV();
    const VectorXd dm = sc.d.cwiseSqrt().cwiseInverse();
    sc.G = L * V * dm.asDiagonal();
    const MatrixXd Linv = sc.chol_x.matrixL().solve(MatrixXd::Identity(L.rows(), L.cols()));
    sc.G_inv = sc.d.cwiseSqrt().asDiagonal() * V.transpose() * Linv;
    sc.W = Sym(sc.G * sc.G.transpose());
    return true;
  }

  // Schur complement M_ij = sum_k <A_ik, W_k A_jk W_k>.
  MatrixXd BuildSchur(const std::vector<NtScaling>& scalings) const {
    MatrixXd M = MatrixXd::Zero(m_, m_);
    for (std::size_t k = 0; k < patterns_.size(); ++k) {
      const auto& pat = patterns_[k];
      const MatrixXd& W = scalings[k].W;
      const int npack = pat.npack();
      std::vector<double> V(static_cast<std::size_t>(npack));
      const std::size_t nnz = pat.rows.size();
      for (int e1 = 0; e1 < npack; ++e1) {
        const auto e1s = static_cast<std::size_t>(e1);
        const int t_begin = pat.offsets[e1s], t_end = pat.offsets[e1s + 1];
        if (t_begin == t_end) continue;
        const int p = pat.entry_p[static_cast<std::size_t>(e1)], q = pat.entry_q[static_cast<std::size_t>(e1)];
        const double* wp = W.col(p).data();
        const double* wq = W.col(q).data();
        for (int e2 = 0; e2 < npack; ++e2) {
          const int r = pat.entry_p[static_cast<std::size_t>(e2)], s = pat.entry_q[static_cast<std::size_t>(e2)];
          V[static_cast<std::size_t>(e2)] = wq[r] * wp[s] + wq[s] * wp[r];
        }
        for (int t1 = t_begin; t1 < t_end; ++t1) {
          const double c1 = 0.5 * pat.functional[static_cast<std::size_t>(t1)];
          double* Mi = M.col(pat.rows[static_cast<std::size_t>(t1)]).data();
          for (std::size_t t2 = 0; t2 < nnz; ++t2) {
            Mi[pat.rows[t2]] += c1 * pat.functional[t2] * V[static_cast<std::size_t>(pat.entry_of[t2])];
          }
        }
      }
    }
    return M;
  }

  bool Factor(MatrixXd M) {
    schur_ = M;
    const double scale = std::max(1.0, M.diagonal().cwiseAbs().maxCoeff());
    double reg = 0.0;
    for (int attempt = 0; attempt < 6; ++attempt) {
      if (reg > 0.0) M.diagonal().array() += reg;
      chol_m_.compute(M);
      if (chol_m_.info() == Eigen::Success) break;
      reg = reg == 0.0 ? 1e-14 * scale : reg * 100.0;
      if (attempt == 5) return false;
    }
    if (f_ > 0) {
      MinvB_ = chol_m_.solve(B_);
      MatrixXd K = B_.transpose() * MinvB_;
      K = Sym(K);
      const double kscale = std::max(1.0, K.diagonal().cwiseAbs().maxCoeff());
      double kreg = 0.0;
      for (int attempt = 0; attempt < 6; ++attempt) {
        if (kreg > 0.0) K.diagonal().array() += kreg;
        chol_k_.compute(K);
        if (chol_k_.info() == Eigen::Success) return true;
        kreg = kreg == 0.0 ? 1e-14 * kscale : kreg * 100.0;
      }
      return false;
    }
    return true;
  }

  void SolveNewton(const VectorXd& h, const VectorXd& rw, VectorXd& du, VectorXd& dy) const {
    if (f_ > 0) {
      dy = chol_k_.solve(rw - MinvB_.transpose() * h);
      du = chol_m_.solve(h + B_ * dy);
    } else {
      dy = VectorXd::Zero(0);
      du = chol_m_.solve(h);
    }
  }

  struct Direction {
    std::vector<MatrixXd> dX, dS;
    VectorXd dy, du;
  };

  Direction SolveDirection(const std::vector<MatrixXd>& Rc, const std::vector<NtScaling>& sc,
                           const std::vector<MatrixXd>& Rd, const VectorXd& Rp, const VectorXd& Rw) const {
    std::vector<MatrixXd> tmp(Rc.size());
    for (std::size_t k = 0; k < Rc.size(); ++k) tmp[k] = Rc[k] - sc[k].W * Rd[k] * sc[k].W;
    const VectorXd h = ApplyA(tmp) - Rp;
    Direction dir;
    SolveNewton(h, Rw, dir.du, dir.dy);
    // Iterative refinement on [M -B; B^T 0] [du; dy] = [h; Rw].
    for (int pass = 0; pass < 3; ++pass) {
      const VectorXd r1 = h - schur_ * dir.du + B_ * dir.dy;
      const VectorXd r2 = Rw - B_.transpose() * dir.du;
      if (r1.norm() <= 1e-15 * (1.0 + h.norm()) && r2.norm() <= 1e-15 * (1.0 + Rw.norm())) break;
      VectorXd cu, cy;
      SolveNewton(r1, r2, cu, cy);
      dir.du += cu;
      dir.dy += cy;
    }
    dir.dS = ApplyAdjoint(dir.du);
    dir.dX.resize(Rc.size());
    for (std::size_t k = 0; k < Rc.size(); ++k) {
      dir.dS[k] += Rd[k];
      dir.dX[k] = Sym(Rc[k] - sc[k].W * dir.dS[k] * sc[k].W);
    }
    return dir;
  }

  // Right-hand side of the scaled complementarity equation, mapped back:
  // G T G^T with T_ij = (2 target delta_ij - 2 d_i^2 delta_ij - H_ij) / (d_i + d_j).
  static MatrixXd ComplementarityRhs(const NtScaling& sc, double target, const MatrixXd* dXp, const MatrixXd* dSp) {
    const Eigen::Index n = sc.d.size();
    MatrixXd H = MatrixXd::Zero(n, n);
    if (dXp) {
      const MatrixXd Xt = sc.G_inv * (*dXp) * sc.G_inv.transpose();
      const MatrixXd St = sc.G.transpose() * (*dSp) * sc.G;
      H = Xt * St;
      H = H + H.transpose().eval();
    }
    MatrixXd T(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) {
        double v = -H(i, j);
        if (i == j) v += 2.0 * target - 2.0 * sc.d[i] * sc.d[i];
        T(i, j) = v / (sc.d[i] + sc.d[j]);
      }
    }
    return Sym(sc.G * T * sc.G.transpose());
  }

  static double MaxStep(const Eigen::LLT<MatrixXd>& chol, const MatrixXd& D) {
    MatrixXd T = chol.matrixL().solve(D);
    T = chol.matrixL().solve(T.transpose().eval());
    T = Sym(T);
    const double lmin = Eigen::SelfAdjointEigenSolver<MatrixXd>(T, Eigen::EigenvaluesOnly).eigenvalues()(0);
    return lmin >= 0.0 ? std::numeric_limits<double>::infinity() : -1.0 / lmin;
  }

  const SdpProblem& prob_;
  const std::vector<MatrixXd>& C_;
  double constant_;
  SdpOptions opts_;
  std::vector<BlockPattern> patterns_;
  int m_, f_;
  int total_dim_ = 0;
  MatrixXd B_;
  Eigen::LLT<MatrixXd> chol_m_, chol_k_;
  MatrixXd MinvB_;
  MatrixXd schur_;
};

SdpSolution InteriorPoint::Run() {
  const std::size_t nb = patterns_.size();
  const VectorXd& b = prob_.rhs;
  const VectorXd& w = prob_.objective;
  const double norm_b = b.norm();
  double norm_c2 = 0.0;
  for (const auto& c : C_) norm_c2 += c.squaredNorm();
  const double norm_w = std::sqrt(w.squaredNorm() + norm_c2);

  // Cold start: scaled identities sized from the data norms.
  std::vector<MatrixXd> X(nb), S(nb);
  std::vector<double> row_norm2(static_cast<std::size_t>(m_), 0.0);
  for (const auto& pat : patterns_) {
    for (std::size_t t = 0; t < pat.rows.size(); ++t) {
      row_norm2[static_cast<std::size_t>(pat.rows[t])] += pat.coefs[t] * pat.functional[t];
    }
  }
  for (std::size_t k = 0; k < nb; ++k) {
    const int n = patterns_[k].n;
    double xi = std::max(10.0, std::sqrt(static_cast<double>(n)));
    double eta = xi;
    for (int i = 0; i < m_; ++i) {
      const double an = std::sqrt(row_norm2[static_cast<std::size_t>(i)]);
      xi = std::max(xi, n * (1.0 + std::abs(b[i])) / (1.0 + an));
      eta = std::max(eta, an);
    }
    eta = std::max(eta, (1.0 + norm_w) / std::sqrt(static_cast<double>(n)));
    eta = std::max(eta, C_[k].norm());
    X[k] = xi * MatrixXd::Identity(n, n);
    S[k] = eta * MatrixXd::Identity(n, n);
  }
  VectorXd y = VectorXd::Zero(f_);
  VectorXd u = VectorXd::Zero(m_);

  SdpSolution sol;
  sol.status = SolveStatus::kMaxIterations;
  int stall = 0;
  double prev_ap = 1.0, prev_ad = 1.0;
  // Best iterate by max(relgap, pinf, dinf), kept for the near-optimal fallback.
  struct Snapshot {
    std::vector<MatrixXd> X, S;
    VectorXd y, u;
    SdpSolution metrics;
    double score = std::numeric_limits<double>::infinity();
    int iter = 0;
  } best;

  for (int iter = 0;; ++iter) {
    const VectorXd Rp = b - ApplyA(X) - B_ * y;
    std::vector<MatrixXd> Rd = ApplyAdjoint(u);
    double rd2 = 0.0, gap = 0.0, cx = 0.0, ray_d2 = 0.0;
    for (std::size_t k = 0; k < nb; ++k) {
      ray_d2 += (Rd[k] - S[k]).squaredNorm();
      Rd[k] -= S[k] + C_[k];
      rd2 += Rd[k].squaredNorm();
      gap += Inner(X[k], S[k]);
      cx += Inner(C_[k], X[k]);
    }
    const VectorXd Rw = w - B_.transpose() * u;
    const double pobj = cx + w.dot(y), dobj = b.dot(u);
    const double pinf = Rp.norm() / (1.0 + norm_b);
    const double dinf = std::sqrt(rd2 + Rw.squaredNorm()) / (1.0 + norm_w);
    const double relgap = std::max(gap, std::abs(dobj - pobj)) /
                          (1.0 + std::abs(pobj + constant_) + std::abs(dobj + constant_));
    const double mu = gap / total_dim_;

#ifndef NDEBUG
    {
      // Gap identity: dual - primal = <X,S> + <X,Rd> + Rp.u - Rw.y.
      double xrd = 0.0;
      for (std::size_t k = 0; k < nb; ++k) xrd += Inner(X[k], Rd[k]);
      const double lhs = dobj - pobj, rhs = gap + xrd + Rp.dot(u) - Rw.dot(y);
      const double scale = 1.0 + std::abs(dobj) + std::abs(pobj) + std::abs(gap) + std::abs(xrd) +
                           std::abs(Rp.dot(u)) + std::abs(Rw.dot(y));
      assert(std::abs(lhs - rhs) <= 1e-8 * scale);
      (void)lhs;
      (void)rhs;
      (void)scale;
    }
#endif

    sol.iterations = iter;
    sol.final_gap = gap;
    sol.relative_gap = relgap;
    sol.primal_objective = pobj + constant_;
    sol.dual_objective = dobj + constant_;
    sol.primal_infeasibility = pinf;
    sol.dual_infeasibility = dinf;
    if (opts_.verbose) {
      std::fprintf(stderr, "%3d pobj % .10e dobj % .10e gap %.2e pinf %.2e dinf %.2e\n", iter, pobj + constant_,
                   dobj + constant_, relgap, pinf, dinf);
    }
    const double score = std::max({relgap, pinf, dinf});
    if (score < 0.5 * best.score) {
      best.X = X;
      best.S = S;
      best.y = y;
      best.u = u;
      best.metrics = sol;
      best.score = score;
      best.iter = iter;
    }

    if (relgap <= opts_.gap_tol && pinf <= opts_.feas_tol && dinf <= opts_.feas_tol) {
      sol.status = SolveStatus::kOptimal;
      break;
    }
    // Farkas-type certificates from the current iterate.
    if (dobj < 0.0) {
      const double scale = -dobj;
      const double ray = std::max((w - Rw).norm(), std::sqrt(ray_d2)) / scale;
      if (ray <= opts_.infeas_tol) {
        sol.status = SolveStatus::kInfeasible;
        break;
      }
    }
    if (pobj > 0.0) {
      const double ray = (b - Rp).norm() / pobj;
      if (ray <= opts_.infeas_tol) {
        sol.status = SolveStatus::kUnbounded;
        break;
      }
    }
    if (iter >= opts_.max_iters) {
      sol.status = SolveStatus::kMaxIterations;
      break;
    }

    std::vector<NtScaling> sc(nb);
    bool ok = true;
    for (std::size_t k = 0; k < nb && ok; ++k) ok = ComputeScaling(X[k], S[k], sc[k]);
    if (!ok || !Factor(BuildSchur(sc))) {
      sol.status = SolveStatus::kNumericalFailure;
      break;
    }

    // Predictor.
    std::vector<MatrixXd> Rc(nb);
    for (std::size_t k = 0; k < nb; ++k) Rc[k] = ComplementarityRhs(sc[k], 0.0, nullptr, nullptr);
    const Direction pred = SolveDirection(Rc, sc, Rd, Rp, Rw);
    double ap = 1.0, ad = 1.0;
    for (std::size_t k = 0; k < nb; ++k) {
      ap = std::min(ap, MaxStep(sc[k].chol_x, pred.dX[k]));
      ad = std::min(ad, MaxStep(sc[k].chol_s, pred.dS[k]));
    }
    double mu_aff = 0.0;
    for (std::size_t k = 0; k < nb; ++k) mu_aff += Inner(X[k] + ap * pred.dX[k], S[k] + ad * pred.dS[k]);
    mu_aff /= total_dim_;
    const double expon = std::min(ap, ad) > 0.1 ? 3.0 : 2.0;
    const double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, expon), 0.0, 1.0);

    // Corrector.
    for (std::size_t k = 0; k < nb; ++k) Rc[k] = ComplementarityRhs(sc[k], sigma * mu, &pred.dX[k], &pred.dS[k]);
    const Direction dir = SolveDirection(Rc, sc, Rd, Rp, Rw);
    double max_p = std::numeric_limits<double>::infinity(), max_d = max_p;
    for (std::size_t k = 0; k < nb; ++k) {
      max_p = std::min(max_p, MaxStep(sc[k].chol_x, dir.dX[k]));
      max_d = std::min(max_d, MaxStep(sc[k].chol_s, dir.dS[k]));
    }
    const double gamma = 0.9 + 0.09 * std::min(prev_ap, prev_ad);
    ap = std::min(1.0, gamma * max_p);
    ad = std::min(1.0, gamma * max_d);
    if (!std::isfinite(ap) || !std::isfinite(ad) || !dir.du.allFinite() || !dir.dy.allFinite()) {
      sol.status = SolveStatus::kNumericalFailure;
      break;
    }
    for (std::size_t k = 0; k < nb; ++k) {
      X[k] = Sym(X[k] + ap * dir.dX[k]);
      S[k] = Sym(S[k] + ad * dir.dS[k]);
    }
    y += ap * dir.dy;
    u += ad * dir.du;
    prev_ap = ap;
    prev_ad = ad;

    stall = (ap < 1e-8 && ad < 1e-8) ? stall + 1 : 0;
    if (stall >= 5 || iter - best.iter >= 30) {
      sol.status = SolveStatus::kNumericalFailure;
      sol.iterations = iter + 1;
      break;
    }
  }

  const bool stopped = sol.status == SolveStatus::kNumericalFailure || sol.status == SolveStatus::kMaxIterations;
  if (stopped && best.score <= opts_.near_tol) {
    const int iterations = sol.iterations;
    sol = best.metrics;
    sol.iterations = iterations;
    sol.status = SolveStatus::kNearOptimal;
    X = std::move(best.X);
    S = std::move(best.S);
    y = std::move(best.y);
    u = std::move(best.u);
  }

  sol.free_vars = y;
  sol.block_matrices = X;
  sol.dual_slacks = S;
  sol.dual_vector = u;
  return sol;
}

// A free variable with a single nonzero entry, alone among the free entries of
// its row, is fixed by that row. Substituting it turns its objective term into a
// linear objective on the blocks and drops the row.
struct Substitution {
  SdpProblem problem;
  std::vector<MatrixXd> C;
  double constant = 0.0;
  std::vector<int> kept_rows;  // original row of each remaining row
  std::vector<int> kept_vars;  // original index of each remaining free variable
  struct Pivot {
    int var, row;
    double beta;
  };
  std::vector<Pivot> pivots;
};

Substitution SubstituteSingletonFree(const SdpProblem& problem) {
  const int m = problem.n_rows, f = problem.n_free;
  std::map<std::pair<int, int>, double> merged;  // (var, row) -> coefficient
  for (const auto& e : problem.free_entries) merged[{e.var, e.row}] += e.value;
  std::vector<int> var_count(static_cast<std::size_t>(f), 0), row_count(static_cast<std::size_t>(m), 0);
  for (const auto& [key, v] : merged) {
    if (v == 0.0) continue;
    ++var_count[static_cast<std::size_t>(key.first)];
    ++row_count[static_cast<std::size_t>(key.second)];
  }
  Substitution out;
  std::vector<char> row_gone(static_cast<std::size_t>(m), 0), var_gone(static_cast<std::size_t>(f), 0);
  std::vector<double> row_weight(static_cast<std::size_t>(m), 0.0);
  for (const auto& [key, v] : merged) {
    const auto [var, row] = key;
    if (v == 0.0 || var_count[static_cast<std::size_t>(var)] != 1 || row_count[static_cast<std::size_t>(row)] != 1) {
      continue;
    }
    out.pivots.push_back({var, row, v});
    row_gone[static_cast<std::size_t>(row)] = 1;
    var_gone[static_cast<std::size_t>(var)] = 1;
    row_weight[static_cast<std::size_t>(row)] = problem.objective[var] / v;
    out.constant += problem.objective[var] * problem.rhs[row] / v;
  }
  for (int d : problem.block_dims) out.C.push_back(MatrixXd::Zero(d, d));
  for (const auto& e : problem.block_entries) {
    if (!row_gone[static_cast<std::size_t>(e.row)]) continue;
    MatrixXd& C = out.C[static_cast<std::size_t>(e.block)];
    const double v = row_weight[static_cast<std::size_t>(e.row)] * e.value;
    C(e.i, e.j) -= v;
    if (e.i != e.j) C(e.j, e.i) -= v;
  }

  std::vector<int> row_index(static_cast<std::size_t>(m), -1), var_index(static_cast<std::size_t>(f), -1);
  for (int i = 0; i < m; ++i) {
    if (row_gone[static_cast<std::size_t>(i)]) continue;
    row_index[static_cast<std::size_t>(i)] = static_cast<int>(out.kept_rows.size());
    out.kept_rows.push_back(i);
  }
  for (int j = 0; j < f; ++j) {
    if (var_gone[static_cast<std::size_t>(j)]) continue;
    var_index[static_cast<std::size_t>(j)] = static_cast<int>(out.kept_vars.size());
    out.kept_vars.push_back(j);
  }
  SdpProblem& r = out.problem;
  r.block_dims = problem.block_dims;
  r.n_rows = static_cast<int>(out.kept_rows.size());
  r.n_free = static_cast<int>(out.kept_vars.size());
  r.rhs.resize(r.n_rows);
  for (int i = 0; i < r.n_rows; ++i) r.rhs[i] = problem.rhs[out.kept_rows[static_cast<std::size_t>(i)]];
  r.objective.resize(r.n_free);
  for (int j = 0; j < r.n_free; ++j) r.objective[j] = problem.objective[out.kept_vars[static_cast<std::size_t>(j)]];
  for (auto e : problem.block_entries) {
    e.row = row_index[static_cast<std::size_t>(e.row)];
    if (e.row >= 0) r.block_entries.push_back(e);
  }
  for (auto e : problem.free_entries) {
    e.row = row_index[static_cast<std::size_t>(e.row)];
    e.var = var_index[static_cast<std::size_t>(e.var)];
    if (e.row >= 0 && e.var >= 0) r.free_entries.push_back(e);
  }
  return out;
}

}  // namespace

SdpSolution solve(const SdpProblem& problem, const SdpOptions& options) {
  problem.validate();
  const Substitution sub = SubstituteSingletonFree(problem);
  const PreprocessedProblem pre = preprocess(sub.problem);
  SdpSolution sol;
  if (pre.inconsistent) {
    sol.status = SolveStatus::kInfeasible;
    sol.free_vars = Eigen::VectorXd::Zero(problem.n_free);
    for (int d : problem.block_dims) {
      sol.block_matrices.push_back(Eigen::MatrixXd::Zero(d, d));
      sol.dual_slacks.push_back(Eigen::MatrixXd::Zero(d, d));
    }
    sol.dual_vector = Eigen::VectorXd::Zero(problem.n_rows);
  } else {
    sol = InteriorPoint(pre.problem, sub.C, sub.constant, options).Run();
    Eigen::VectorXd u = Eigen::VectorXd::Zero(problem.n_rows);
    for (std::size_t i = 0; i < pre.kept_rows.size(); ++i) {
      u[sub.kept_rows[static_cast<std::size_t>(pre.kept_rows[i])]] = sol.dual_vector[static_cast<Eigen::Index>(i)];
    }
    Eigen::VectorXd y = Eigen::VectorXd::Zero(problem.n_free);
    for (std::size_t j = 0; j < sub.kept_vars.size(); ++j) {
      y[sub.kept_vars[j]] = sol.free_vars[static_cast<Eigen::Index>(j)];
    }
    // Substituted variables make their rows exact.
    const Eigen::VectorXd partial = problem.apply(sol.block_matrices, y);
    for (const auto& pv : sub.pivots) {
      y[pv.var] = (problem.rhs[pv.row] - partial[pv.row]) / pv.beta;
      u[pv.row] = problem.objective[pv.var] / pv.beta;
    }
    sol.dual_vector = u;
    sol.free_vars = y;
    // Report primal infeasibility against every original row.
    const Eigen::VectorXd r = problem.rhs - problem.apply(sol.block_matrices, sol.free_vars);
    sol.primal_infeasibility = r.norm() / (1.0 + problem.rhs.norm());
  }
  sol.rows_before = problem.n_rows;
  sol.rows_after = problem.n_rows - static_cast<int>(pre.removed_rows.size());
  return sol;
}

// ---------------------------------------------------------------------------
// Interchange format

void write_sdp_dump(const SdpProblem& p, std::ostream& out) {
  p.validate();
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  out << "pdiff-sdp 1\n";
  out << "rows " << p.n_rows << "\n";
  out << "free " << p.n_free << "\n";
  out << "blocks " << p.block_dims.size();
  for (int d : p.block_dims) out << ' ' << d;
  out << "\n";
  out << "rhs\n";
  for (int i = 0; i < p.n_rows; ++i) {
    if (p.rhs[i] != 0.0) out << i << ' ' << num(p.rhs[i]) << "\n";
  }
  out << "objective\n";
  for (int j = 0; j < p.n_free; ++j) {
    if (p.objective[j] != 0.0) out << j << ' ' << num(p.objective[j]) << "\n";
  }
  out << "free_entries " << p.free_entries.size() << "\n";
  for (const auto& e : p.free_entries) out << e.row << ' ' << e.var << ' ' << num(e.value) << "\n";
  out << "block_entries " << p.block_entries.size() << "\n";
  for (const auto& e : p.block_entries) {
    out << e.row << ' ' << e.block << ' ' << e.i << ' ' << e.j << ' ' << num(e.value) << "\n";
  }
  out << "end\n";
}

SdpProblem read_sdp_dump(std::istream& in) {
  auto fail = [](const std::string& what) { throw std::runtime_error("read_sdp_dump: " + what); };
  std::string word;
  int version = 0;
  if (!(in >> word >> version) || word != "pdiff-sdp" || version != 1) fail("bad header");
  SdpProblem p;
  std::size_t nblocks = 0;
  if (!(in >> word >> p.n_rows) || word != "rows") fail("expected rows");
  if (!(in >> word >> p.n_free) || word != "free") fail("expected free");
  if (!(in >> word >> nblocks) || word != "blocks") fail("expected blocks");
  p.block_dims.resize(nblocks);
  for (auto& d : p.block_dims) {
    if (!(in >> d)) fail("bad block size");
  }
  p.rhs = Eigen::VectorXd::Zero(p.n_rows);
  p.objective = Eigen::VectorXd::Zero(p.n_free);
  if (!(in >> word) || word != "rhs") fail("expected rhs");
  auto read_sparse = [&](Eigen::VectorXd& v, const char* next) {
    while (in >> word) {
      if (word == next) return;
      int i = std::stoi(word);
      double x = 0;
      if (!(in >> x) || i < 0 || i >= v.size()) fail("bad vector entry");
      v[i] = x;
    }
    fail(std::string("expected ") + next);
  };
  read_sparse(p.rhs, "objective");
  read_sparse(p.objective, "free_entries");
  std::size_t nf = 0, nbe = 0;
  if (!(in >> nf)) fail("bad free entry count");
  p.free_entries.resize(nf);
  for (auto& e : p.free_entries) {
    if (!(in >> e.row >> e.var >> e.value)) fail("bad free entry");
  }
  if (!(in >> word >> nbe) || word != "block_entries") fail("expected block_entries");
  p.block_entries.resize(nbe);
  for (auto& e : p.block_entries) {
    if (!(in >> e.row >> e.block >> e.i >> e.j >> e.value)) fail("bad block entry");
  }
  if (!(in >> word) || word != "end") fail("expected end");
  p.validate();
  return p;
}

}  // namespace pdiff
