#pragma once

// Sparse multivariate polynomials over a real scalar type.
//
// A Polynomial<Scalar> is an immutable-by-convention value holding a map from
// Monomial (exponent vector) to coefficient. Every arithmetic result is
// normalized: coefficients with magnitude below kZeroThreshold are dropped, so
// the zero polynomial has an empty term map. Monomials are ordered graded
// lexicographically (total degree first, then exponent vectors compared
// lexicographically with x1 most significant); this single order drives every
// Gram-matrix index in the library.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdio>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pdiff {

class Monomial {
 public:
  Monomial() = default;
  explicit Monomial(int nvars) : exponents_(static_cast<std::size_t>(nvars), 0) {}
  explicit Monomial(std::vector<int> exponents) : exponents_(std::move(exponents)) {
    for (int e : exponents_) {
      if (e < 0) throw std::invalid_argument("Monomial: negative exponent");
      degree_ += e;
    }
  }

  int nvars() const { return static_cast<int>(exponents_.size()); }
  int degree() const { return degree_; }
  int operator[](int k) const { return exponents_[static_cast<std::size_t>(k)]; }
  const std::vector<int>& exponents() const { return exponents_; }

  Monomial operator*(const Monomial& other) const {
    if (other.nvars() != nvars()) throw std::invalid_argument("Monomial: arity mismatch");
    std::vector<int> e = exponents_;
    for (std::size_t k = 0; k < e.size(); ++k) e[k] += other.exponents_[k];
    return Monomial(std::move(e));
  }

  friend bool operator==(const Monomial&, const Monomial&) = default;
  friend std::strong_ordering operator<=>(const Monomial& a, const Monomial& b) {
    if (auto c = a.degree_ <=> b.degree_; c != 0) return c;
    return a.exponents_ <=> b.exponents_;
  }

 private:
  std::vector<int> exponents_;
  int degree_ = 0;
};

/// Joint (x, z) variable list: x occupies slots [0, nx), z occupies [nx, nx + nz).
struct VariableSplit {
  int nx = 0;
  int nz = 0;
  int joint() const { return nx + nz; }
};

enum class Block { kX, kZ };

template <typename Scalar>
class Polynomial {
 public:
  using TermMap = std::map<Monomial, Scalar>;
  static constexpr double kZeroThreshold = 1e-14;

  Polynomial() = default;
  explicit Polynomial(int nvars) : nvars_(nvars) {
    if (nvars < 0) throw std::invalid_argument("Polynomial: negative arity");
  }
  Polynomial(int nvars, TermMap terms) : nvars_(nvars), terms_(std::move(terms)) {
    for (const auto& [m, c] : terms_) {
      if (m.nvars() != nvars_) throw std::invalid_argument("Polynomial: monomial arity mismatch");
    }
    Normalize();
  }

  static Polynomial Constant(int nvars, Scalar value) {
    TermMap t;
    t.emplace(Monomial(nvars), value);
    return Polynomial(nvars, std::move(t));
  }
  static Polynomial Variable(int nvars, int k) {
    std::vector<int> e(static_cast<std::size_t>(nvars), 0);
    e.at(static_cast<std::size_t>(k)) = 1;
    TermMap t;
    t.emplace(Monomial(std::move(e)), Scalar(1));
    return Polynomial(nvars, std::move(t));
  }
  static Polynomial Term(const Monomial& m, Scalar coefficient) {
    TermMap t;
    t.emplace(m, coefficient);
    return Polynomial(m.nvars(), std::move(t));
  }

  int nvars() const { return nvars_; }
  const TermMap& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }

  /// Total degree; -1 for the zero polynomial.
  int degree() const { return terms_.empty() ? -1 : terms_.rbegin()->first.degree(); }

  Scalar coefficient(const Monomial& m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? Scalar(0) : it->second;
  }
  Scalar constant_term() const { return coefficient(Monomial(nvars_)); }

  Polynomial& operator+=(const Polynomial& q) {
    CheckArity(q);
    for (const auto& [m, c] : q.terms_) terms_[m] += c;
    Normalize();
    return *this;
  }
  Polynomial& operator-=(const Polynomial& q) {
    CheckArity(q);
    for (const auto& [m, c] : q.terms_) terms_[m] -= c;
    Normalize();
    return *this;
  }
  Polynomial& operator*=(Scalar s) {
    for (auto& [m, c] : terms_) c *= s;
    Normalize();
    return *this;
  }

  friend Polynomial operator+(Polynomial p, const Polynomial& q) { return p += q; }
  friend Polynomial operator-(Polynomial p, const Polynomial& q) { return p -= q; }
  friend Polynomial operator-(Polynomial p) { return p *= Scalar(-1); }
  friend Polynomial operator*(Polynomial p, Scalar s) { return p *= s; }
  friend Polynomial operator*(Scalar s, Polynomial p) { return p *= s; }
  friend Polynomial operator*(const Polynomial& p, const Polynomial& q) {
    p.CheckArity(q);
    TermMap out;
    for (const auto& [mp, cp] : p.terms_) {
      for (const auto& [mq, cq] : q.terms_) out[mp * mq] += cp * cq;
    }
    return Polynomial(p.nvars_, std::move(out));
  }
  friend bool operator==(const Polynomial&, const Polynomial&) = default;

 private:
  void CheckArity(const Polynomial& q) const {
    if (q.nvars_ != nvars_) throw std::invalid_argument("Polynomial: arity mismatch");
  }
  void Normalize() {
    using std::abs;
    std::erase_if(terms_, [](const auto& kv) { return abs(kv.second) < Scalar(kZeroThreshold); });
  }

  int nvars_ = 0;
  TermMap terms_;
};

using Polynomiald = Polynomial<double>;

namespace internal {
inline double Binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}
}  // namespace internal

template <typename Scalar>
Polynomial<Scalar> pow(const Polynomial<Scalar>& p, int k) {
  if (k < 0) throw std::invalid_argument("pow: negative exponent");
  Polynomial<Scalar> result = Polynomial<Scalar>::Constant(p.nvars(), Scalar(1));
  Polynomial<Scalar> base = p;
  while (k > 0) {
    if (k & 1) result = result * base;
    k >>= 1;
    if (k > 0) base = base * base;
  }
  return result;
}

/// Direct sum of coefficient times the product of point powers.
template <typename Scalar>
Scalar evaluate(const Polynomial<Scalar>& p, std::span<const Scalar> point) {
  if (static_cast<int>(point.size()) != p.nvars()) {
    throw std::invalid_argument("evaluate: point length does not match arity");
  }
  Scalar sum(0);
  for (const auto& [m, c] : p.terms()) {
    Scalar term = c;
    for (int k = 0; k < m.nvars(); ++k) {
      for (int e = 0; e < m[k]; ++e) term *= point[static_cast<std::size_t>(k)];
    }
    sum += term;
  }
  return sum;
}

/// Flattened evaluator for hot loops (verification, grids, sampling objectives).
/// Holds scratch space, so give each thread its own copy.
template <typename Scalar>
class PolynomialEvaluator {
 public:
  PolynomialEvaluator() = default;
  explicit PolynomialEvaluator(const Polynomial<Scalar>& p) : nvars_(p.nvars()) {
    max_exp_.assign(static_cast<std::size_t>(nvars_), 0);
    for (const auto& [m, c] : p.terms()) {
      coefficients_.push_back(c);
      for (int k = 0; k < nvars_; ++k) {
        exponents_.push_back(m[k]);
        max_exp_[static_cast<std::size_t>(k)] = std::max(max_exp_[static_cast<std::size_t>(k)], m[k]);
      }
    }
    stride_ = 1 + (max_exp_.empty() ? 0 : *std::max_element(max_exp_.begin(), max_exp_.end()));
    powers_.assign(static_cast<std::size_t>(nvars_ * stride_), Scalar(1));
  }

  int nvars() const { return nvars_; }

  Scalar operator()(std::span<const Scalar> point) {
    if (static_cast<int>(point.size()) != nvars_) {
      throw std::invalid_argument("PolynomialEvaluator: point length does not match arity");
    }
    for (int k = 0; k < nvars_; ++k) {
      Scalar* row = &powers_[static_cast<std::size_t>(k * stride_)];
      const auto ks = static_cast<std::size_t>(k);
      for (int e = 1; e <= max_exp_[ks]; ++e) row[e] = row[e - 1] * point[ks];
    }
    Scalar sum(0);
    const int* e = exponents_.data();
    for (std::size_t t = 0; t < coefficients_.size(); ++t, e += nvars_) {
      Scalar term = coefficients_[t];
      for (int k = 0; k < nvars_; ++k) term *= powers_[static_cast<std::size_t>(k * stride_ + e[k])];
      sum += term;
    }
    return sum;
  }

 private:
  int nvars_ = 0;
  int stride_ = 1;
  std::vector<Scalar> coefficients_;
  std::vector<int> exponents_;
  std::vector<int> max_exp_;
  std::vector<Scalar> powers_;
};

/// Lift p into the joint (x, z) variable list, placing its variables in `block`.
template <typename Scalar>
Polynomial<Scalar> embed(const Polynomial<Scalar>& p, const VariableSplit& split, Block block) {
  const int width = block == Block::kX ? split.nx : split.nz;
  if (p.nvars() != width) throw std::invalid_argument("embed: arity does not match block size");
  const int offset = block == Block::kX ? 0 : split.nx;
  typename Polynomial<Scalar>::TermMap out;
  for (const auto& [m, c] : p.terms()) {
    std::vector<int> e(static_cast<std::size_t>(split.joint()), 0);
    for (int k = 0; k < width; ++k) e[static_cast<std::size_t>(offset + k)] = m[k];
    out.emplace(Monomial(std::move(e)), c);
  }
  return Polynomial<Scalar>(split.joint(), std::move(out));
}

/// a(x + z) over the joint variable list, expanded one variable at a time with
/// the binomial theorem.
template <typename Scalar>
Polynomial<Scalar> shift_compose(const Polynomial<Scalar>& a, const VariableSplit& split) {
  if (a.nvars() != split.nx || split.nx != split.nz) {
    throw std::invalid_argument("shift_compose: arity does not match variable split");
  }
  Polynomial<Scalar> current = embed(a, split, Block::kX);
  for (int k = 0; k < split.nx; ++k) {
    typename Polynomial<Scalar>::TermMap next;
    for (const auto& [m, c] : current.terms()) {
      const int e = m[k];
      for (int i = 0; i <= e; ++i) {
        std::vector<int> ex = m.exponents();
        ex[static_cast<std::size_t>(k)] = e - i;
        ex[static_cast<std::size_t>(split.nx + k)] += i;
        next[Monomial(std::move(ex))] += c * Scalar(internal::Binomial(e, i));
      }
    }
    current = Polynomial<Scalar>(split.joint(), std::move(next));
  }
  return current;
}

/// p(offset + scale .* x), expanded one variable at a time.
template <typename Scalar>
Polynomial<Scalar> affine_substitute(const Polynomial<Scalar>& p, std::span<const Scalar> offset,
                                     std::span<const Scalar> scale) {
  const auto n = static_cast<std::size_t>(p.nvars());
  if (offset.size() != n || scale.size() != n) {
    throw std::invalid_argument("affine_substitute: arity mismatch");
  }
  Polynomial<Scalar> current = p;
  for (std::size_t k = 0; k < n; ++k) {
    typename Polynomial<Scalar>::TermMap next;
    for (const auto& [m, c] : current.terms()) {
      const int e = m[static_cast<int>(k)];
      for (int i = 0; i <= e; ++i) {
        Scalar f = c * Scalar(internal::Binomial(e, i));
        for (int j = 0; j < e - i; ++j) f *= offset[k];
        for (int j = 0; j < i; ++j) f *= scale[k];
        std::vector<int> ex = m.exponents();
        ex[k] = i;
        next[Monomial(std::move(ex))] += f;
      }
    }
    current = Polynomial<Scalar>(p.nvars(), std::move(next));
  }
  return current;
}

/// All monomials in `nvars` variables of total degree <= max_degree, graded-lex ascending.
inline std::vector<Monomial> monomial_basis(int nvars, int max_degree) {
  if (nvars < 0 || max_degree < 0) throw std::invalid_argument("monomial_basis: negative argument");
  std::vector<Monomial> out;
  std::vector<int> e(static_cast<std::size_t>(nvars), 0);
  auto rec = [&](auto&& self, int k, int remaining) -> void {
    if (k == nvars) {
      out.emplace_back(e);
      return;
    }
    for (int d = 0; d <= remaining; ++d) {
      e[static_cast<std::size_t>(k)] = d;
      self(self, k + 1, remaining - d);
    }
    e[static_cast<std::size_t>(k)] = 0;
  };
  rec(rec, 0, max_degree);
  std::sort(out.begin(), out.end());
  return out;
}

template <typename Scalar>
Scalar max_abs_coefficient(const Polynomial<Scalar>& p) {
  using std::abs;
  Scalar m(0);
  for (const auto& [mono, c] : p.terms()) m = std::max(m, Scalar(abs(c)));
  return m;
}

/// Human-readable form parseable by parse_polynomial; coefficients keep 17
/// significant digits so printing and re-parsing is lossless for doubles.
inline std::string to_string(const Polynomiald& p, const std::vector<std::string>& names) {
  if (static_cast<int>(names.size()) != p.nvars()) throw std::invalid_argument("to_string: name count mismatch");
  if (p.is_zero()) return "0";
  std::string out;
  bool first = true;
  // Highest degree first reads naturally.
  for (auto it = p.terms().rbegin(); it != p.terms().rend(); ++it) {
    const auto& [m, c] = *it;
    double mag = std::abs(c);
    if (first) {
      if (c < 0) out += "-";
    } else {
      out += c < 0 ? " - " : " + ";
    }
    first = false;
    std::string factors;
    for (int k = 0; k < m.nvars(); ++k) {
      if (m[k] == 0) continue;
      if (!factors.empty()) factors += "*";
      factors += names[static_cast<std::size_t>(k)];
      if (m[k] > 1) factors += "^" + std::to_string(m[k]);
    }
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", mag);
    if (factors.empty()) {
      out += buf;
    } else if (mag == 1.0) {
      out += factors;
    } else {
      out += std::string(buf) + "*" + factors;
    }
  }
  return out;
}

}  // namespace pdiff
