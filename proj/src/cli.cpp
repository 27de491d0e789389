#include "pdiff/cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pdiff/bundle.hpp"
#include "pdiff/problem_file.hpp"
#include "pdiff/pontryagin.hpp"
#include "pdiff/verify.hpp"

namespace pdiff {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<int> DefaultGridResolution(int dim) { return {dim <= 2 ? 200 : 60}; }

struct SolveArgs {
  std::string problem;
  std::string out_dir;
  bool long_running = false;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::vector<int> grid_res;
  std::string objective;
  bool dump_sdp = false;
  std::vector<int> verify_res;
  int n_z = 0;
  bool no_verify = false;
  bool verbose = false;
};

struct VerifyArgs {
  std::string bundle;
  std::vector<int> grid_res;
  int n_z = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

struct GridArgs {
  std::string bundle;
  std::vector<int> grid_res;
  std::string out;
};

VerificationOptions VerifyOptionsFor(const ProblemFile& p, int dim, const std::vector<int>& res_override,
                                     int n_z_override, std::uint64_t seed) {
  VerificationOptions o = default_verification_options(dim, seed);
  if (!p.verify_resolution.empty()) o.resolution = p.verify_resolution;
  if (p.verify_n_z > 0) o.n_z = p.verify_n_z;
  if (!res_override.empty()) o.resolution = res_override;
  if (n_z_override > 0) o.n_z = n_z_override;
  return o;
}

int Solve(const SolveArgs& args, std::ostream& out, std::ostream& err) {
  ProblemFile problem;
  ProblemSpec spec;
  try {
    problem = load_problem_file(args.problem);
    if (args.seed_set) problem.seed = args.seed;
    if (args.objective == "box") problem.objective = ObjectiveMode::kBoxIntegral;
    if (args.objective == "mc") problem.objective = ObjectiveMode::kMonteCarlo;
    if (!args.grid_res.empty()) problem.grid_resolution = args.grid_res;
    spec = problem.to_spec();
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  if (problem.long_running && !args.long_running) {
    err << "error: problem '" << problem.name << "' is marked long_running; pass --long-running to solve it\n";
    return kExitInputError;
  }

  std::vector<SosProgram> programs;
  PdiffOptions options;
  options.sdp.verbose = args.verbose;
  PdiffResult result = compute_pdiff(spec, options, &programs);
  for (const auto& w : result.warnings) err << "warning: " << w << "\n";

  int code = kExitOk;
  for (const auto& st : result.stats) {
    if (st.outcome == ConstraintOutcome::kSolverFailure) {
      code = kExitSolverFailure;
    } else if (st.outcome == ConstraintOutcome::kInvalidCertificate && code == kExitOk) {
      code = kExitInvalidCertificate;
    }
  }

  std::vector<std::pair<std::string, std::string>> files;
  files.emplace_back("problem.json", serialize_problem_file(problem));
  files.emplace_back("c_polys.txt", format_c_polys(result.c_polys));
  files.emplace_back("certificates.json", certificates_json(result, programs));
  if (args.dump_sdp) {
    for (std::size_t i = 0; i < programs.size(); ++i) {
      std::ostringstream ss;
      write_sdp_dump(programs[i].sdp, ss);
      files.emplace_back("sdp_" + std::to_string(i) + ".txt", ss.str());
    }
  }
  std::optional<VerificationReport> report;
  if (!args.no_verify) {
    const VerificationOptions vo =
        VerifyOptionsFor(problem, spec.nvars(), args.verify_res, args.n_z, problem.seed);
    report = verify_result(result.c_polys, spec, vo);
    files.emplace_back("verification.json", verification_json(*report));
  }
  const std::vector<int> grid_res =
      problem.grid_resolution.empty() ? DefaultGridResolution(spec.nvars()) : problem.grid_resolution;
  files.emplace_back("grid.txt", format_grid_file(spec, result.c_polys, grid_res));

  json info;
  info["name"] = problem.name;
  info["exit_code"] = code;
  info["sound"] = result.sound;
  info["empty"] = result.empty;
  info["seconds"] = result.seconds;
  info["warnings"] = result.warnings;
  if (result.objective_weight_discrepancy) info["objective_weight_discrepancy"] = *result.objective_weight_discrepancy;
  json per = json::array();
  for (std::size_t i = 0; i < result.stats.size(); ++i) {
    const auto& st = result.stats[i];
    per.push_back({{"constraint", i},
                   {"outcome", std::string(to_string(st.outcome))},
                   {"solver_status", std::string(to_string(st.status))},
                   {"iterations", st.iterations},
                   {"seconds", st.seconds},
                   {"rows_before_preprocess", st.rows_before},
                   {"rows_after_preprocess", st.rows_after}});
  }
  info["constraints"] = per;
  if (report) info["soundness_violations"] = report->soundness_violations;

  ManifestCheck check;
  try {
    check = write_bundle(args.out_dir, files, info.dump());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  if (!check.ok) {
    for (const auto& p : check.problems) err << "error: bundle self-check: " << p << "\n";
    return kExitInputError;
  }

  for (std::size_t i = 0; i < result.stats.size(); ++i) {
    const auto& st = result.stats[i];
    char line[256];
    std::snprintf(line, sizeof(line),
                  "constraint %zu: %s (solver %s, %d iterations, %.2f s, rows %d -> %d, residual %.2e, eps %.2e)\n",
                  i, std::string(to_string(st.outcome)).c_str(), std::string(to_string(st.status)).c_str(),
                  st.iterations, st.seconds, st.rows_before, st.rows_after, st.residual_max, st.epsilon);
    out << line;
  }
  if (result.empty) out << "C is empty on the region\n";
  if (report) {
    out << "verification: " << report->soundness_violations << " soundness violations on " << report->n_grid
        << " grid points x " << report->n_z_samples << " z samples; area ratio " << report->area_ratio << "\n";
  }
  out << "bundle written to " << args.out_dir << "\n";
  return code;
}

struct LoadedBundle {
  ProblemFile problem;
  ProblemSpec spec;
  std::vector<Polynomiald> c_polys;
};

LoadedBundle LoadBundle(const fs::path& dir) {
  const ManifestCheck check = check_manifest(dir);
  if (!check.ok) {
    std::string msg = "bundle check failed:";
    for (const auto& p : check.problems) msg += " " + p + ";";
    throw BundleError(msg);
  }
  LoadedBundle b;
  b.problem = parse_problem_file(read_file(dir / "problem.json"));
  b.spec = b.problem.to_spec();
  b.c_polys = parse_c_polys(read_file(dir / "c_polys.txt"));
  if (b.c_polys.size() != b.spec.setA.constraints().size()) throw BundleError("c_polys does not match A");
  for (const auto& c : b.c_polys) {
    if (c.nvars() != b.spec.nvars()) throw BundleError("c_polys arity does not match the problem");
  }
  return b;
}

int Verify(const VerifyArgs& args, std::ostream& out, std::ostream& err) {
  LoadedBundle b;
  try {
    b = LoadBundle(args.bundle);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  const std::uint64_t seed = args.seed_set ? args.seed : b.problem.seed;
  const VerificationReport rep =
      verify_result(b.c_polys, b.spec, VerifyOptionsFor(b.problem, b.spec.nvars(), args.grid_res, args.n_z, seed));
  out << verification_json(rep);
  return rep.soundness_violations == 0 ? kExitOk : 2;
}

int GridCmd(const GridArgs& args, std::ostream& out, std::ostream& err) {
  LoadedBundle b;
  try {
    b = LoadBundle(args.bundle);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  std::vector<int> res = args.grid_res;
  if (res.empty()) {
    res = b.problem.grid_resolution.empty() ? DefaultGridResolution(b.spec.nvars()) : b.problem.grid_resolution;
  }
  const fs::path path = args.out.empty() ? fs::path(args.bundle) / "grid_export.txt" : fs::path(args.out);
  try {
    const std::string text = format_grid_file(b.spec, b.c_polys, res);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw BundleError("cannot write " + path.string());
    f << text;
    f.close();
    if (!f) throw BundleError("write failed for " + path.string());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  out << "grid written to " << path.string() << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Inner approximations of Pontryagin differences of semi-algebraic sets"};
  app.require_subcommand(1);

  SolveArgs sa;
  auto* solve_cmd = app.add_subcommand("solve", "Solve a problem file and write a result bundle");
  solve_cmd->add_option("problem", sa.problem, "Problem file (JSON)")->required();
  solve_cmd->add_option("--out,-o", sa.out_dir, "Bundle directory")->required();
  solve_cmd->add_flag("--long-running", sa.long_running, "Allow problems marked long_running");
  solve_cmd->add_option("--seed", sa.seed, "RNG seed override")->each([&](const std::string&) { sa.seed_set = true; });
  solve_cmd->add_option("--grid-res", sa.grid_res, "Grid export resolution (one value or one per axis)");
  solve_cmd->add_option("--objective", sa.objective, "Objective override")->check(CLI::IsMember({"box", "mc"}));
  solve_cmd->add_flag("--dump-sdp", sa.dump_sdp, "Write each assembled SDP in the interchange format");
  solve_cmd->add_option("--verify-res", sa.verify_res, "Verification grid resolution");
  solve_cmd->add_option("--n-z", sa.n_z, "z samples per grid point in verification");
  solve_cmd->add_flag("--no-verify", sa.no_verify, "Skip the sampling verification");
  solve_cmd->add_flag("--verbose,-v", sa.verbose, "Print interior-point iterations to stderr");

  VerifyArgs va;
  auto* verify_cmd = app.add_subcommand("verify", "Re-run sampling verification on a bundle");
  verify_cmd->add_option("bundle", va.bundle, "Bundle directory")->required();
  verify_cmd->add_option("--grid-res", va.grid_res, "Verification grid resolution");
  verify_cmd->add_option("--n-z", va.n_z, "z samples per grid point");
  verify_cmd->add_option("--seed", va.seed, "RNG seed override")->each([&](const std::string&) { va.seed_set = true; });

  GridArgs ga;
  auto* grid_cmd = app.add_subcommand("grid", "Export a, b and min c fields on a grid");
  grid_cmd->add_option("bundle", ga.bundle, "Bundle directory")->required();
  grid_cmd->add_option("--grid-res", ga.grid_res, "Resolution (one value or one per axis)");
  grid_cmd->add_option("--out,-o", ga.out, "Output path (default <bundle>/grid_export.txt)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  if (solve_cmd->parsed()) return Solve(sa, out, err);
  if (verify_cmd->parsed()) return Verify(va, out, err);
  return GridCmd(ga, out, err);
}

}  // namespace pdiff
