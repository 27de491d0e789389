#include "pdiff/bundle.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>

namespace pdiff {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BundleError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw BundleError("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xf];
  }
  return out;
}

namespace {

std::string Num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json Finite(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::vector<std::string> SplitLines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.emplace_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

}  // namespace

std::string format_c_polys(const std::vector<Polynomiald>& polys) {
  const int n = polys.empty() ? 0 : polys.front().nvars();
  std::string out = "pdiff-c 1\nnvars " + std::to_string(n) + "\npolynomials " + std::to_string(polys.size()) + "\n";
  for (std::size_t i = 0; i < polys.size(); ++i) {
    if (polys[i].nvars() != n) throw BundleError("format_c_polys: arity mismatch");
    out += "polynomial " + std::to_string(i) + " terms " + std::to_string(polys[i].size()) + "\n";
    for (const auto& [m, c] : polys[i].terms()) {
      for (int k = 0; k < n; ++k) out += std::to_string(m[k]) + " ";
      out += Num(c) + "\n";
    }
  }
  out += "end\n";
  return out;
}

std::vector<Polynomiald> parse_c_polys(std::string_view text) {
  std::istringstream in{std::string(text)};
  auto fail = [](const std::string& what) -> void { throw BundleError("c_polys: " + what); };
  std::string word;
  int version = 0, n = 0;
  std::size_t count = 0;
  if (!(in >> word >> version) || word != "pdiff-c" || version != 1) fail("bad header");
  if (!(in >> word >> n) || word != "nvars" || n < 1) fail("bad nvars");
  if (!(in >> word >> count) || word != "polynomials") fail("bad polynomial count");
  std::vector<Polynomiald> out;
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t idx = 0, terms = 0;
    std::string tw;
    if (!(in >> word >> idx >> tw >> terms) || word != "polynomial" || tw != "terms" || idx != i) {
      fail("bad polynomial header");
    }
    Polynomiald::TermMap map;
    for (std::size_t t = 0; t < terms; ++t) {
      std::vector<int> e(static_cast<std::size_t>(n));
      for (auto& x : e) {
        if (!(in >> x) || x < 0) fail("bad exponent");
      }
      std::string coef;
      if (!(in >> coef)) fail("missing coefficient");
      double c = 0.0;
      try {
        std::size_t used = 0;
        c = std::stod(coef, &used);
        if (used != coef.size()) fail("bad coefficient " + coef);
      } catch (const std::logic_error&) {
        fail("bad coefficient " + coef);
      }
      if (!std::isfinite(c)) fail("non-finite coefficient");
      map[Monomial(std::move(e))] += c;
    }
    out.emplace_back(n, std::move(map));
  }
  if (!(in >> word) || word != "end") fail("missing end marker");
  if (in >> word) fail("trailing data");
  return out;
}

std::string format_grid_file(const ProblemSpec& spec, const std::vector<Polynomiald>& c_polys,
                             const std::vector<int>& resolution) {
  std::string out;
  auto field = [&](const std::string& name, const std::vector<Polynomiald>& polys, const Box& box) {
    const Grid grid = make_grid(box, resolution);
    out += "field," + name + ",dim," + std::to_string(box.dim()) + ",resolution";
    for (int r : grid.resolution) out += "," + std::to_string(r);
    out += ",lower";
    for (int k = 0; k < box.dim(); ++k) out += "," + Num(box.lower[k]);
    out += ",upper";
    for (int k = 0; k < box.dim(); ++k) out += "," + Num(box.upper[k]);
    out += "\n";
    for (double v : evaluate_region(polys, grid)) {
      out += Num(v);
      out += '\n';
    }
  };
  field("a", spec.setA.constraints(), spec.region);
  field("b", spec.setB.constraints(), spec.b_box);
  field("c_min", c_polys, spec.region);
  return out;
}

namespace {

std::vector<GridField> ParseGridFields(std::string_view text) {
  std::vector<GridField> fields;
  const std::vector<std::string> lines = SplitLines(text);
  std::size_t i = 0;
  while (i < lines.size()) {
    std::vector<std::string> cells;
    std::stringstream ss(lines[i]);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < 4 || cells[0] != "field" || cells[2] != "dim") throw BundleError("grid: bad header line");
    GridField f;
    f.name = cells[1];
    const int n = std::stoi(cells[3]);
    if (n < 1 || cells.size() != static_cast<std::size_t>(4 + 3 + 3 * n)) throw BundleError("grid: bad header arity");
    std::size_t pos = 4;
    if (cells[pos++] != "resolution") throw BundleError("grid: expected resolution");
    for (int k = 0; k < n; ++k) f.resolution.push_back(std::stoi(cells[pos++]));
    if (cells[pos++] != "lower") throw BundleError("grid: expected lower");
    f.box.lower.resize(n);
    f.box.upper.resize(n);
    for (int k = 0; k < n; ++k) f.box.lower[k] = std::stod(cells[pos++]);
    if (cells[pos++] != "upper") throw BundleError("grid: expected upper");
    for (int k = 0; k < n; ++k) f.box.upper[k] = std::stod(cells[pos++]);
    long long count = 1;
    for (int r : f.resolution) count *= r;
    ++i;
    if (i + static_cast<std::size_t>(count) > lines.size()) throw BundleError("grid: truncated field " + f.name);
    f.values.reserve(static_cast<std::size_t>(count));
    for (long long k = 0; k < count; ++k) f.values.push_back(std::stod(lines[i++]));
    fields.push_back(std::move(f));
  }
  return fields;
}

}  // namespace

std::vector<GridField> parse_grid_file(std::string_view text) {
  try {
    return ParseGridFields(text);
  } catch (const std::logic_error& e) {
    throw BundleError(std::string("grid: bad number: ") + e.what());
  }
}

std::string verification_json(const VerificationReport& r) {
  json j;
  j["resolution"] = r.resolution;
  j["n_grid"] = r.n_grid;
  j["n_z_samples"] = r.n_z_samples;
  j["seed"] = r.seed;
  j["n_in_c"] = r.n_in_c;
  j["n_in_brute_force"] = r.n_in_brute;
  j["n_c_not_brute_force"] = r.n_c_not_brute;
  j["soundness_violations"] = r.soundness_violations;
  j["worst_margin"] = Finite(r.worst_margin);
  j["sound_slack"] = r.sound_slack;
  j["conservatism"] = r.conservatism;
  j["area_ratio"] = r.area_ratio;
  j["area_c"] = r.area_c;
  j["area_brute_force"] = r.area_brute;
  j["seconds"] = r.seconds;
  return j.dump(2) + "\n";
}

std::string certificates_json(const PdiffResult& result, const std::vector<SosProgram>& programs) {
  json arr = json::array();
  for (std::size_t i = 0; i < result.stats.size(); ++i) {
    const ConstraintStats& st = result.stats[i];
    json j;
    j["constraint"] = i;
    j["outcome"] = std::string(to_string(st.outcome));
    j["solver_status"] = std::string(to_string(st.status));
    j["iterations"] = st.iterations;
    j["seconds"] = st.seconds;
    j["rows_before_preprocess"] = st.rows_before;
    j["rows_after_preprocess"] = st.rows_after;
    j["block_dims"] = st.block_dims;
    j["relative_gap"] = st.relative_gap;
    j["residual_max"] = st.residual_max;
    j["min_eigenvalue"] = Finite(st.min_eigenvalue);
    j["epsilon"] = Finite(st.epsilon);
    j["objective_value"] = st.objective_value;
    j["a_scale"] = st.a_scale;
    j["max_c_over_region"] = Finite(st.max_c_over_region);
    j["empty"] = static_cast<bool>(result.empty_flags[i]);
    j["message"] = st.message;
    const Certificate& cert = result.certificates[i];
    if (!cert.gram_matrices.empty() && i < programs.size()) {
      j["coordinates"] = "scaled: x = center + half_width * u, z = half_width * w";
      j["c_coefficients"] = std::vector<double>(cert.c_coeffs.data(), cert.c_coeffs.data() + cert.c_coeffs.size());
      json cm = json::array();
      for (const auto& m : programs[i].c_monomials) cm.push_back(m.exponents());
      j["c_monomials"] = cm;
      j["min_eigenvalues"] = cert.min_eigenvalues;
      json blocks = json::array();
      for (std::size_t k = 0; k < cert.gram_matrices.size(); ++k) {
        const GramBlock& gb = programs[i].blocks[k];
        json b;
        b["role"] = gb.role == BlockRole::kIdentity     ? "identity"
                    : gb.role == BlockRole::kMultiplier ? "multiplier"
                                                        : "region_multiplier";
        if (gb.role != BlockRole::kIdentity) b["multiplier_index"] = gb.multiplier_index;
        json basis = json::array();
        for (const auto& m : gb.basis) basis.push_back(m.exponents());
        b["basis"] = basis;
        json rows = json::array();
        const auto& Q = cert.gram_matrices[k];
        for (Eigen::Index r = 0; r < Q.rows(); ++r) {
          std::vector<double> row(static_cast<std::size_t>(Q.cols()));
          for (Eigen::Index c = 0; c < Q.cols(); ++c) row[static_cast<std::size_t>(c)] = Q(r, c);
          rows.push_back(row);
        }
        b["gram"] = rows;
        blocks.push_back(b);
      }
      j["blocks"] = blocks;
    }
    arr.push_back(j);
  }
  json top;
  top["center"] = std::vector<double>(result.center.data(), result.center.data() + result.center.size());
  top["half_width"] =
      std::vector<double>(result.half_width.data(), result.half_width.data() + result.half_width.size());
  top["constraints"] = arr;
  return top.dump(1) + "\n";
}

ManifestCheck check_manifest(const std::filesystem::path& dir) {
  ManifestCheck check;
  json manifest;
  try {
    manifest = json::parse(read_file(dir / "manifest.json"));
  } catch (const std::exception& e) {
    check.ok = false;
    check.problems.push_back(std::string("manifest.json unreadable: ") + e.what());
    return check;
  }
  if (!manifest.contains("files") || !manifest["files"].is_array()) {
    check.ok = false;
    check.problems.push_back("manifest.json has no file list");
    return check;
  }
  for (const auto& f : manifest["files"]) {
    const std::string path = f.value("path", "");
    const std::string expected = f.value("sha256", "");
    std::string content;
    try {
      content = read_file(dir / path);
    } catch (const std::exception&) {
      check.ok = false;
      check.problems.push_back("missing artifact " + path);
      continue;
    }
    if (sha256_hex(content) != expected) {
      check.ok = false;
      check.problems.push_back("digest mismatch for " + path);
    }
  }
  return check;
}

ManifestCheck write_bundle(const std::filesystem::path& dir,
                           const std::vector<std::pair<std::string, std::string>>& files,
                           const std::string& info_json) {
  std::filesystem::create_directories(dir);
  json list = json::array();
  for (const auto& [path, content] : files) {
    std::ofstream out(dir / path, std::ios::binary | std::ios::trunc);
    if (!out) throw BundleError("cannot write " + (dir / path).string());
    out << content;
    out.close();
    if (!out) throw BundleError("write failed for " + (dir / path).string());
    list.push_back({{"path", path}, {"bytes", content.size()}, {"sha256", sha256_hex(content)}});
  }
  json manifest = json::parse(info_json);
  manifest["files"] = list;
  {
    std::ofstream out(dir / "manifest.json", std::ios::binary | std::ios::trunc);
    if (!out) throw BundleError("cannot write manifest.json");
    out << manifest.dump(2) << "\n";
  }
  return check_manifest(dir);
}

}  // namespace pdiff
