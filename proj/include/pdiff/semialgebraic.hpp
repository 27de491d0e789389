#pragma once

// Semi-algebraic sets {x : p_k(x) >= 0 for all k}, the problem description
// that ties two of them to a region and degree choices, and the expression
// parser that reads human-written polynomials.
//
// Expression grammar (whitespace insensitive):
//
//   expr    := term (('+' | '-') term)*
//   term    := unary ('*' unary)*
//   unary   := ('+' | '-') unary | power
//   power   := primary ('^' uint)*
//   primary := number | identifier | '(' expr ')'
//   number  := digits ['.' digits] [('e' | 'E') ['+' | '-'] digits]
//   uint    := digits
//
// '^' binds tighter than unary minus, so "-x^2" is -(x^2).

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "pdiff/polynomial.hpp"

namespace pdiff {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, std::size_t position)
      : std::runtime_error(message + " at position " + std::to_string(position)),
        detail_(message),
        position_(position) {}
  std::size_t position() const { return position_; }
  /// Message without the position suffix.
  const std::string& detail() const { return detail_; }

 private:
  std::string detail_;
  std::size_t position_;
};

Polynomiald parse_polynomial(std::string_view text, const std::vector<std::string>& variables);

/// Axis-aligned box [lower, upper].
struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  int dim() const { return static_cast<int>(lower.size()); }
  Eigen::VectorXd center() const { return 0.5 * (lower + upper); }
  Eigen::VectorXd half_width() const { return 0.5 * (upper - lower); }
  double volume() const { return (upper - lower).prod(); }
  bool contains(const Eigen::VectorXd& x) const {
    return ((x - lower).array() >= 0.0).all() && ((upper - x).array() >= 0.0).all();
  }
  /// Throws std::invalid_argument unless lower < upper componentwise.
  void validate(const char* what) const;
};

class SemiAlgebraicSet {
 public:
  SemiAlgebraicSet() = default;
  SemiAlgebraicSet(std::vector<Polynomiald> constraints, std::string name = {});

  int nvars() const { return nvars_; }
  const std::vector<Polynomiald>& constraints() const { return constraints_; }
  const std::string& name() const { return name_; }
  int max_degree() const;

  /// Smallest constraint value at x.
  double min_value(std::span<const double> x) const;
  bool contains(std::span<const double> x, double slack = 0.0) const;

 private:
  int nvars_ = 0;
  std::vector<Polynomiald> constraints_;
  std::string name_;
};

inline bool contains(const SemiAlgebraicSet& set, const Eigen::VectorXd& x, double slack = 0.0) {
  return set.contains(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), slack);
}

struct BoxCheckReport {
  int n_samples = 0;
  int n_violations = 0;
  std::optional<Eigen::VectorXd> first_violation;
};

/// Samples the shell between `box` and the box inflated by 10% of its width
/// (5% per side) and reports points that satisfy every constraint of `set`:
/// evidence that the box does not contain the set.
BoxCheckReport bounding_box_check(const SemiAlgebraicSet& set, const Box& box, int n_samples = 100000,
                                  std::uint64_t seed = 1);

enum class ObjectiveMode { kBoxIntegral, kMonteCarlo };
enum class ShrinkMode { kOff, kAuto };
enum class GramBasis { kNewton, kFull };

struct ToleranceSet {
  double sdp_gap = 1e-8;
  double psd_margin = 1e-7;
  double residual_max = 1e-6;
  ShrinkMode shrink_epsilon_mode = ShrinkMode::kAuto;
};

struct ProblemSpec {
  std::vector<std::string> variables;
  SemiAlgebraicSet setA;
  SemiAlgebraicSet setB;
  Box region;
  Box b_box;
  int deg_c = 10;
  int deg_s = 4;
  ObjectiveMode objective_mode = ObjectiveMode::kBoxIntegral;
  int n_samples = 100000;
  std::uint64_t rng_seed = 1;
  ToleranceSet tolerances;
  GramBasis basis = GramBasis::kNewton;
  int max_iters = 200;
  bool localize_region = false;  // certify only for x in the region

  int nvars() const { return setA.nvars(); }
  /// Throws std::invalid_argument describing the first violated requirement.
  void validate() const;
};

}  // namespace pdiff
