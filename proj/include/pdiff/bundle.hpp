#pragma once

// Result bundle: a directory of plain-text artifacts plus manifest.json, which
// lists every artifact with its size and SHA-256 digest.
//
// c_polys.txt layout:
//
//   pdiff-c 1
//   nvars <n>
//   polynomials <m>
//   polynomial <i> terms <t>
//   <e_1> ... <e_n> <coefficient>      (t lines, coefficient in %.17g)
//   ...
//   end
//
// Grid export layout: for each field (a over the region, b over the B box,
// c_min over the region) a header line
//
//   field,<name>,dim,<n>,resolution,<r_1>,...,<r_n>,lower,<l_1>,...,upper,<u_1>,...
//
// followed by one value per line in row-major order (first variable slowest),
// sampled at cell centers.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pdiff/pontryagin.hpp"
#include "pdiff/verify.hpp"

namespace pdiff {

class BundleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string sha256_hex(std::string_view data);

std::string format_c_polys(const std::vector<Polynomiald>& polys);
std::vector<Polynomiald> parse_c_polys(std::string_view text);

struct GridField {
  std::string name;
  Box box;
  std::vector<int> resolution;
  std::vector<double> values;
};

std::string format_grid_file(const ProblemSpec& spec, const std::vector<Polynomiald>& c_polys,
                             const std::vector<int>& resolution);
std::vector<GridField> parse_grid_file(std::string_view text);

std::string verification_json(const VerificationReport& report);

/// Solver statistics, Gram matrices with their monomial bases, c coefficients
/// and residual diagnostics for every constraint.
std::string certificates_json(const PdiffResult& result, const std::vector<SosProgram>& programs);

struct ManifestCheck {
  bool ok = true;
  std::vector<std::string> problems;
};

/// Writes each (relative path, content) pair into `dir`, then manifest.json
/// holding `info` (a JSON object text) and the file digests, then re-reads
/// everything and checks the digests.
ManifestCheck write_bundle(const std::filesystem::path& dir,
                           const std::vector<std::pair<std::string, std::string>>& files,
                           const std::string& info_json);

/// Every file listed in manifest.json exists and matches its digest.
ManifestCheck check_manifest(const std::filesystem::path& dir);

std::string read_file(const std::filesystem::path& path);

}  // namespace pdiff
