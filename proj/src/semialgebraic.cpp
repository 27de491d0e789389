#include "pdiff/semialgebraic.hpp"

#include <cctype>
#include <charconv>
#include <limits>

#include "pdiff/random.hpp"

namespace pdiff {

namespace {

class Parser {
 public:
  Parser(std::string_view text, const std::vector<std::string>& variables)
      : text_(text), variables_(variables), nvars_(static_cast<int>(variables.size())) {}

  Polynomiald Parse() {
    Polynomiald p = Expr();
    SkipSpace();
    if (pos_ != text_.size()) Fail("unexpected character '" + std::string(1, text_[pos_]) + "'");
    return p;
  }

 private:
  [[noreturn]] void Fail(const std::string& what) const { throw ParseError(what, pos_); }

  void SkipSpace() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool Accept(char c) {
    SkipSpace();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Polynomiald Expr() {
    Polynomiald p = Term();
    while (true) {
      if (Accept('+')) {
        p += Term();
      } else if (Accept('-')) {
        p -= Term();
      } else {
        return p;
      }
    }
  }

  Polynomiald Term() {
    Polynomiald p = Unary();
    while (Accept('*')) p = p * Unary();
    return p;
  }

  Polynomiald Unary() {
    if (Accept('-')) return -Unary();
    if (Accept('+')) return Unary();
    return Power();
  }

  Polynomiald Power() {
    Polynomiald base = Primary();
    while (Accept('^')) {
      SkipSpace();
      const std::size_t start = pos_;
      if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        Fail("expected non-negative integer exponent");
      }
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '.' || text_[pos_] == 'e' || text_[pos_] == 'E')) {
        Fail("exponent must be an integer");
      }
      int k = 0;
      auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, k);
      if (ec != std::errc() || k > 1000) {
        pos_ = start;
        Fail("exponent out of range");
      }
      base = pow(base, k);
    }
    return base;
  }

  Polynomiald Primary() {
    SkipSpace();
    if (pos_ >= text_.size()) Fail("unexpected end of expression");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Polynomiald p = Expr();
      if (!Accept(')')) Fail("expected ')'");
      return p;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return Number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return Identifier();
    Fail("unexpected character '" + std::string(1, c) + "'");
  }

  Polynomiald Number() {
    const std::size_t start = pos_;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), value);
    if (ec != std::errc()) Fail("malformed number");
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    if (pos_ < text_.size() && (std::isalpha(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      pos_ = start;
      Fail("malformed number");
    }
    return Polynomiald::Constant(nvars_, value);
  }

  Polynomiald Identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    const std::string_view name = text_.substr(start, pos_ - start);
    for (int k = 0; k < nvars_; ++k) {
      if (variables_[static_cast<std::size_t>(k)] == name) return Polynomiald::Variable(nvars_, k);
    }
    pos_ = start;
    Fail("unknown identifier '" + std::string(name) + "'");
  }

  std::string_view text_;
  const std::vector<std::string>& variables_;
  int nvars_;
  std::size_t pos_ = 0;
};

}  // namespace

Polynomiald parse_polynomial(std::string_view text, const std::vector<std::string>& variables) {
  return Parser(text, variables).Parse();
}

void Box::validate(const char* what) const {
  if (lower.size() != upper.size() || lower.size() == 0) {
    throw std::invalid_argument(std::string(what) + ": box bounds must have equal, nonzero length");
  }
  if (!((upper - lower).array() > 0.0).all()) {
    throw std::invalid_argument(std::string(what) + ": box requires lower < upper componentwise");
  }
}

SemiAlgebraicSet::SemiAlgebraicSet(std::vector<Polynomiald> constraints, std::string name)
    : constraints_(std::move(constraints)), name_(std::move(name)) {
  if (constraints_.empty()) throw std::invalid_argument("SemiAlgebraicSet: needs at least one constraint");
  nvars_ = constraints_.front().nvars();
  for (const auto& p : constraints_) {
    if (p.nvars() != nvars_) throw std::invalid_argument("SemiAlgebraicSet: constraints disagree on arity");
  }
}

int SemiAlgebraicSet::max_degree() const {
  int d = 0;
  for (const auto& p : constraints_) d = std::max(d, p.degree());
  return d;
}

double SemiAlgebraicSet::min_value(std::span<const double> x) const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& p : constraints_) m = std::min(m, evaluate(p, x));
  return m;
}

bool SemiAlgebraicSet::contains(std::span<const double> x, double slack) const {
  if (static_cast<int>(x.size()) != nvars_) throw std::invalid_argument("contains: arity mismatch");
  for (const auto& p : constraints_) {
    if (evaluate(p, x) < -slack) return false;
  }
  return true;
}

BoxCheckReport bounding_box_check(const SemiAlgebraicSet& set, const Box& box, int n_samples,
                                  std::uint64_t seed) {
  if (box.dim() != set.nvars()) throw std::invalid_argument("bounding_box_check: dimension mismatch");
  const Eigen::VectorXd pad = 0.05 * (box.upper - box.lower);
  const Eigen::VectorXd lo = box.lower - pad, hi = box.upper + pad;
  UniformStream rng(seed, 0xb0c5);
  std::vector<PolynomialEvaluator<double>> evals;
  for (const auto& p : set.constraints()) evals.emplace_back(p);

  BoxCheckReport report;
  while (report.n_samples < n_samples) {
    Eigen::VectorXd x = rng.point(lo, hi);
    if (box.contains(x)) continue;
    ++report.n_samples;
    const std::span<const double> xs(x.data(), static_cast<std::size_t>(x.size()));
    bool inside = true;
    for (auto& e : evals) {
      if (e(xs) < 0.0) {
        inside = false;
        break;
      }
    }
    if (inside) {
      if (!report.first_violation) report.first_violation = x;
      ++report.n_violations;
    }
  }
  return report;
}

void ProblemSpec::validate() const {
  const int n = setA.nvars();
  if (n <= 0) throw std::invalid_argument("problem: set A is empty");
  if (setB.nvars() != n) throw std::invalid_argument("problem: sets A and B have different dimensions");
  if (!variables.empty() && static_cast<int>(variables.size()) != n) {
    throw std::invalid_argument("problem: variable list does not match set dimension");
  }
  region.validate("region");
  b_box.validate("b_box");
  if (region.dim() != n) throw std::invalid_argument("problem: region dimension mismatch");
  if (b_box.dim() != n) throw std::invalid_argument("problem: b_box dimension mismatch");
  if (deg_c < 0 || deg_s < 0) throw std::invalid_argument("problem: degrees must be non-negative");
  if (n_samples < 1) throw std::invalid_argument("problem: n_samples must be positive");
  if (!(tolerances.sdp_gap > 0 && tolerances.psd_margin > 0 && tolerances.residual_max > 0)) {
    throw std::invalid_argument("problem: tolerances must be strictly positive");
  }
  if (max_iters < 1) throw std::invalid_argument("problem: max_iters must be positive");
}

}  // namespace pdiff
