#pragma once

// JSON problem description. Example:
//
//   {
//     "schema_version": 1,
//     "name": "disk",
//     "variables": ["x1", "x2"],
//     "A": ["4 - x1^2 - x2^2"],
//     "B": ["0.25 - x1^2 - x2^2"],
//     "region": {"lower": [-2.1, -2.1], "upper": [2.1, 2.1]},
//     "b_box": {"lower": [-0.5, -0.5], "upper": [0.5, 0.5]},
//     "deg_c": 2,
//     "deg_s": 2
//   }
//
// Optional keys and defaults: "objective" ("box" | "mc", box), "n_samples"
// (100000), "seed" (1), "tolerances" {"sdp_gap": 1e-8, "psd_margin": 1e-7,
// "residual_max": 1e-6, "shrink": "auto" | "off"}, "gram_basis" ("newton" |
// "full"), "max_iters" (200), "localize_region" (false), "grid_resolution" (200 per axis in 2-D, 60 in
// 3-D), "verify" {"resolution": [...], "n_z": ...}, "long_running" (false).

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "pdiff/semialgebraic.hpp"

namespace pdiff {

class ProblemFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ProblemFile {
  int schema_version = 1;
  std::string name;
  std::vector<std::string> variables;
  std::vector<std::string> a_exprs;
  std::vector<std::string> b_exprs;
  Box region;
  Box b_box;
  int deg_c = 10;
  int deg_s = 4;
  ObjectiveMode objective = ObjectiveMode::kBoxIntegral;
  int n_samples = 100000;
  std::uint64_t seed = 1;
  ToleranceSet tolerances;
  GramBasis basis = GramBasis::kNewton;
  int max_iters = 200;
  bool localize_region = false;
  std::vector<int> grid_resolution;    // empty: default for the dimension
  std::vector<int> verify_resolution;  // empty: default for the dimension
  int verify_n_z = 0;                  // 0: default for the dimension
  bool long_running = false;

  /// Parses every expression; throws ParseError (with the expression index in
  /// the message) or std::invalid_argument on inconsistent data.
  ProblemSpec to_spec() const;
};

ProblemFile parse_problem_file(std::string_view json_text);
ProblemFile load_problem_file(const std::filesystem::path& path);
std::string serialize_problem_file(const ProblemFile& problem);

}  // namespace pdiff
