#include "pdiff/problem_file.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace pdiff {

namespace {

using nlohmann::json;

[[noreturn]] void Fail(const std::string& what) { throw ProblemFileError("problem file: " + what); }

const json& Require(const json& j, const char* key) {
  if (!j.contains(key)) Fail(std::string("missing key \"") + key + "\"");
  return j.at(key);
}

Eigen::VectorXd ReadVector(const json& j, const char* what) {
  if (!j.is_array()) Fail(std::string(what) + " must be an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number()) Fail(std::string(what) + " must be an array of numbers");
    v[static_cast<Eigen::Index>(k)] = j[k].get<double>();
  }
  return v;
}

Box ReadBox(const json& j, const char* what) {
  if (!j.is_object()) Fail(std::string(what) + " must be an object with lower and upper");
  Box b{ReadVector(Require(j, "lower"), what), ReadVector(Require(j, "upper"), what)};
  return b;
}

std::vector<std::string> ReadStrings(const json& j, const char* what) {
  if (!j.is_array() || j.empty()) Fail(std::string(what) + " must be a non-empty array of strings");
  std::vector<std::string> out;
  for (const auto& e : j) {
    if (!e.is_string()) Fail(std::string(what) + " must be a non-empty array of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

std::vector<int> ReadResolution(const json& j, const char* what) {
  std::vector<int> out;
  if (j.is_number_integer()) {
    out.push_back(j.get<int>());
  } else if (j.is_array()) {
    for (const auto& e : j) {
      if (!e.is_number_integer()) Fail(std::string(what) + " must hold integers");
      out.push_back(e.get<int>());
    }
  } else {
    Fail(std::string(what) + " must be an integer or an array of integers");
  }
  for (int r : out) {
    if (r < 1) Fail(std::string(what) + " must be positive");
  }
  return out;
}

template <typename T>
T Get(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    Fail(std::string("key \"") + key + "\" has the wrong type");
  }
}

json BoxJson(const Box& b) {
  return json{{"lower", std::vector<double>(b.lower.data(), b.lower.data() + b.lower.size())},
              {"upper", std::vector<double>(b.upper.data(), b.upper.data() + b.upper.size())}};
}

}  // namespace

ProblemSpec ProblemFile::to_spec() const {
  ProblemSpec spec;
  spec.variables = variables;
  std::vector<Polynomiald> a, b;
  for (std::size_t i = 0; i < a_exprs.size(); ++i) {
    try {
      a.push_back(parse_polynomial(a_exprs[i], variables));
    } catch (const ParseError& e) {
      throw ParseError("A[" + std::to_string(i) + "] \"" + a_exprs[i] + "\": " + e.detail(), e.position());
    }
  }
  for (std::size_t i = 0; i < b_exprs.size(); ++i) {
    try {
      b.push_back(parse_polynomial(b_exprs[i], variables));
    } catch (const ParseError& e) {
      throw ParseError("B[" + std::to_string(i) + "] \"" + b_exprs[i] + "\": " + e.detail(), e.position());
    }
  }
  spec.setA = SemiAlgebraicSet(std::move(a), "A");
  spec.setB = SemiAlgebraicSet(std::move(b), "B");
  spec.region = region;
  spec.b_box = b_box;
  spec.deg_c = deg_c;
  spec.deg_s = deg_s;
  spec.objective_mode = objective;
  spec.n_samples = n_samples;
  spec.rng_seed = seed;
  spec.tolerances = tolerances;
  spec.basis = basis;
  spec.max_iters = max_iters;
  spec.localize_region = localize_region;
  spec.validate();
  return spec;
}

ProblemFile parse_problem_file(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    Fail(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) Fail("top level must be an object");
  ProblemFile p;
  p.schema_version = Get<int>(j, "schema_version", 1);
  if (p.schema_version != 1) Fail("unsupported schema_version " + std::to_string(p.schema_version));
  p.name = Get<std::string>(j, "name", "");
  p.variables = ReadStrings(Require(j, "variables"), "variables");
  p.a_exprs = ReadStrings(Require(j, "A"), "A");
  p.b_exprs = ReadStrings(Require(j, "B"), "B");
  p.region = ReadBox(Require(j, "region"), "region");
  p.b_box = ReadBox(Require(j, "b_box"), "b_box");
  p.deg_c = Get<int>(j, "deg_c", p.deg_c);
  p.deg_s = Get<int>(j, "deg_s", p.deg_s);
  const std::string objective = Get<std::string>(j, "objective", "box");
  if (objective == "box") {
    p.objective = ObjectiveMode::kBoxIntegral;
  } else if (objective == "mc") {
    p.objective = ObjectiveMode::kMonteCarlo;
  } else {
    Fail("objective must be \"box\" or \"mc\"");
  }
  p.n_samples = Get<int>(j, "n_samples", p.n_samples);
  p.seed = Get<std::uint64_t>(j, "seed", p.seed);
  if (j.contains("tolerances")) {
    const json& t = j.at("tolerances");
    if (!t.is_object()) Fail("tolerances must be an object");
    p.tolerances.sdp_gap = Get<double>(t, "sdp_gap", p.tolerances.sdp_gap);
    p.tolerances.psd_margin = Get<double>(t, "psd_margin", p.tolerances.psd_margin);
    p.tolerances.residual_max = Get<double>(t, "residual_max", p.tolerances.residual_max);
    const std::string shrink = Get<std::string>(t, "shrink", "auto");
    if (shrink == "auto") {
      p.tolerances.shrink_epsilon_mode = ShrinkMode::kAuto;
    } else if (shrink == "off") {
      p.tolerances.shrink_epsilon_mode = ShrinkMode::kOff;
    } else {
      Fail("tolerances.shrink must be \"auto\" or \"off\"");
    }
  }
  const std::string basis = Get<std::string>(j, "gram_basis", "newton");
  if (basis == "newton") {
    p.basis = GramBasis::kNewton;
  } else if (basis == "full") {
    p.basis = GramBasis::kFull;
  } else {
    Fail("gram_basis must be \"newton\" or \"full\"");
  }
  p.max_iters = Get<int>(j, "max_iters", p.max_iters);
  p.localize_region = Get<bool>(j, "localize_region", false);
  if (j.contains("grid_resolution")) p.grid_resolution = ReadResolution(j.at("grid_resolution"), "grid_resolution");
  if (j.contains("verify")) {
    const json& v = j.at("verify");
    if (!v.is_object()) Fail("verify must be an object");
    if (v.contains("resolution")) p.verify_resolution = ReadResolution(v.at("resolution"), "verify.resolution");
    p.verify_n_z = Get<int>(v, "n_z", 0);
    if (p.verify_n_z < 0) Fail("verify.n_z must be non-negative");
  }
  p.long_running = Get<bool>(j, "long_running", false);
  const int n = static_cast<int>(p.variables.size());
  if (p.region.dim() != n || p.b_box.dim() != n) Fail("region and b_box must have one bound per variable");
  return p;
}

ProblemFile load_problem_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_problem_file(ss.str());
}

std::string serialize_problem_file(const ProblemFile& p) {
  json j;
  j["schema_version"] = p.schema_version;
  j["name"] = p.name;
  j["variables"] = p.variables;
  j["A"] = p.a_exprs;
  j["B"] = p.b_exprs;
  j["region"] = BoxJson(p.region);
  j["b_box"] = BoxJson(p.b_box);
  j["deg_c"] = p.deg_c;
  j["deg_s"] = p.deg_s;
  j["objective"] = p.objective == ObjectiveMode::kBoxIntegral ? "box" : "mc";
  j["n_samples"] = p.n_samples;
  j["seed"] = p.seed;
  j["tolerances"] = {{"sdp_gap", p.tolerances.sdp_gap},
                     {"psd_margin", p.tolerances.psd_margin},
                     {"residual_max", p.tolerances.residual_max},
                     {"shrink", p.tolerances.shrink_epsilon_mode == ShrinkMode::kAuto ? "auto" : "off"}};
  j["gram_basis"] = p.basis == GramBasis::kNewton ? "newton" : "full";
  j["max_iters"] = p.max_iters;
  j["localize_region"] = p.localize_region;
  if (!p.grid_resolution.empty()) j["grid_resolution"] = p.grid_resolution;
  json v = json::object();
  if (!p.verify_resolution.empty()) v["resolution"] = p.verify_resolution;
  if (p.verify_n_z > 0) v["n_z"] = p.verify_n_z;
  if (!v.empty()) j["verify"] = v;
  j["long_running"] = p.long_running;
  return j.dump(2) + "\n";
}

}  // namespace pdiff
