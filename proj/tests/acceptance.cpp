// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Pass --long-running to include the star-cylinder solve.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "pdiff/cli.hpp"
#include "pdiff/pontryagin.hpp"
#include "pdiff/verify.hpp"
#include "test_util.hpp"

namespace pdiff {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double Since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Criterion {
  explicit Criterion(std::string n) : name(std::move(n)) {}

  std::string name;
  bool pass = true;
  std::string detail;

  void Check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "FAILED ") + what;
  }
};

std::string Fmt(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

// Largest reconstruction residual over accepted solves, shared by the
// identity criterion.
struct IdentityLog {
  int accepted = 0;
  double worst = 0.0;
  void Add(const PdiffResult& r) {
    for (std::size_t i = 0; i < r.stats.size(); ++i) {
      if (r.stats[i].outcome != ConstraintOutcome::kValid) continue;
      ++accepted;
      worst = std::max(worst, r.certificates[i].residual_max);
    }
  }
};

bool CertificatesValid(const PdiffResult& r, const ToleranceSet& tol, std::string* why) {
  for (std::size_t i = 0; i < r.stats.size(); ++i) {
    const ConstraintStats& st = r.stats[i];
    if (st.outcome != ConstraintOutcome::kValid || st.residual_max > tol.residual_max ||
        st.min_eigenvalue < -tol.psd_margin) {
      *why = Fmt("constraint %zu %s residual %.2e min eig %.2e", i, std::string(to_string(st.outcome)).c_str(),
                 st.residual_max, st.min_eigenvalue);
      return false;
    }
  }
  return true;
}

Criterion DiskOracle(IdentityLog& log) {
  Criterion c{"disk_oracle"};
  const ProblemSpec spec = testing_util::LoadSpec("disk.json");
  const auto t0 = Clock::now();
  const PdiffResult r = compute_pdiff(spec);
  const VerificationReport v = verify_result(r.c_polys, spec, default_verification_options(2));
  const double seconds = Since(t0);
  log.Add(r);
  const double ratio = v.area_c / (M_PI * 2.25);
  c.Check(r.sound, "sound");
  c.Check(v.soundness_violations == 0, Fmt("%lld violations on %lld x %d", v.soundness_violations, v.n_grid,
                                           v.n_z_samples));
  c.Check(ratio >= 0.95, Fmt("area(C)/(pi 1.5^2) = %.4f", ratio));
  c.Check(seconds < 10.0, Fmt("%.2f s", seconds));
  return c;
}

struct Regression {
  const char* file;
  double reference_seconds;
};

Criterion Regressions(IdentityLog& log, bool long_running) {
  Criterion c{"regressions"};
  std::vector<Regression> rows = {
      {"bowtie.json", 11.93}, {"guitar_pick.json", 2.63}, {"star.json", 1.02}, {"torus.json", 52.11}};
  if (long_running) rows.push_back({"star_cylinder.json", 29.0 * 60.0});
  for (const Regression& row : rows) {
    const ProblemFile file = load_problem_file(testing_util::ProblemPath(row.file));
    const ProblemSpec spec = file.to_spec();
    const auto t0 = Clock::now();
    const PdiffResult r = compute_pdiff(spec);
    const double seconds = Since(t0);
    log.Add(r);
    std::string why;
    const bool valid = CertificatesValid(r, spec.tolerances, &why);
    VerificationOptions vo = default_verification_options(spec.nvars(), file.seed);
    vo.resolution = {spec.nvars() == 2 ? 200 : 40};
    if (file.verify_n_z > 0) vo.n_z = file.verify_n_z;
    const VerificationReport v = verify_result(r.c_polys, spec, vo);
    c.Check(valid, Fmt("%s valid%s%s", row.file, why.empty() ? "" : ": ", why.c_str()));
    c.Check(v.soundness_violations == 0, Fmt("%s %lld violations", row.file, v.soundness_violations));
    c.Check(seconds <= 10.0 * row.reference_seconds, Fmt("%s %.2f s", row.file, seconds));
  }
  return c;
}

Criterion Identity(const IdentityLog& log) {
  Criterion c{"sos_identity"};
  c.Check(log.accepted > 0, Fmt("%d accepted solves", log.accepted));
  c.Check(log.worst <= 1e-6, Fmt("max residual %.2e", log.worst));
  return c;
}

Criterion SolverOracle() {
  Criterion c{"sdp_oracle"};
  std::mt19937_64 gen(20240917);
  std::uniform_int_distribution<int> dim(3, 15);
  double worst = 0.0;
  int optimal = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = dim(gen);
    const Eigen::MatrixXd A = testing_util::RandomSymmetric(n, gen);
    const double expected = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(A).eigenvalues().maxCoeff();
    const SdpSolution sol = solve(testing_util::LambdaMaxProblem(A));
    if (sol.status == SolveStatus::kOptimal) ++optimal;
    worst = std::max(worst, std::abs(sol.free_vars[0] - expected));
  }
  c.Check(optimal == 20, Fmt("%d/20 optimal", optimal));
  c.Check(worst <= 1e-6, Fmt("max |lambda error| %.2e", worst));
  c.Check(solve(testing_util::NegativeTraceProblem()).status == SolveStatus::kInfeasible, "infeasible toy");
  c.Check(solve(testing_util::UnboundedProblem()).status == SolveStatus::kUnbounded, "unbounded toy");
  return c;
}

Criterion ObjectiveEquivalence() {
  Criterion c{"objective_mc_vs_box"};
  const Box box{Eigen::Vector2d(-1.0, -1.0), Eigen::Vector2d(1.0, 1.0)};
  const double err = testing_util::MaxScaledDiscrepancy(box, monomial_basis(2, 10), 1000000, 1);
  c.Check(err <= 0.01, Fmt("max scaled discrepancy %.4f over 66 monomials", err));
  return c;
}

ProblemSpec DiskWithB(double rb) {
  ProblemSpec spec = testing_util::LoadSpec("disk.json");
  spec.setB = SemiAlgebraicSet({parse_polynomial(Fmt("%.17g - x1^2 - x2^2", rb * rb), spec.variables)});
  spec.b_box = Box{Eigen::Vector2d(-rb, -rb), Eigen::Vector2d(rb, rb)};
  return spec;
}

Criterion Monotonicity(IdentityLog& log) {
  Criterion c{"monotonicity"};
  ProblemSpec spec = testing_util::LoadSpec("disk.json");
  const auto weights = box_integral_weights(spec.region, monomial_basis(2, 6));
  double prev_obj = -INFINITY, prev_cons = INFINITY;
  std::string objs, conss;
  bool obj_ok = true, cons_ok = true, sound = true;
  for (int d : {2, 4, 6}) {
    spec.deg_c = d;
    const PdiffResult r = compute_pdiff(spec);
    log.Add(r);
    sound = sound && r.sound;
    const double obj = weights.apply(r.c_polys[0]);
    const double cons = verify_result(r.c_polys, spec, default_verification_options(2)).conservatism;
    obj_ok = obj_ok && obj >= prev_obj - 1e-6 * std::abs(obj);
    cons_ok = cons_ok && cons <= prev_cons + 1e-9;
    objs += Fmt(" %.6f", obj);
    conss += Fmt(" %.4f", cons);
    prev_obj = obj;
    prev_cons = cons;
  }
  c.Check(sound, "deg_c 2,4,6 sound");
  c.Check(obj_ok, "objective" + objs);
  c.Check(cons_ok, "conservatism" + conss);

  const PdiffResult small = compute_pdiff(DiskWithB(0.3)), large = compute_pdiff(DiskWithB(0.6));
  log.Add(small);
  log.Add(large);
  const Grid grid = make_grid(spec.region, {400});
  const std::vector<double> vs = evaluate_region(small, grid), vl = evaluate_region(large, grid);
  long long outside = 0, n_large = 0;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (vl[i] < 0.0) continue;
    ++n_large;
    if (vs[i] < 0.0) ++outside;
  }
  c.Check(outside == 0 && n_large > 0, Fmt("C(0.6) in C(0.3): %lld of %lld points outside", outside, n_large));
  return c;
}

int SolveExitCode(const std::string& b_expr, const Box& b_box, const std::string& tag,
                  std::string* out_text, std::string* err_text) {
  ProblemFile f = load_problem_file(testing_util::ProblemPath("disk.json"));
  f.b_exprs = {b_expr};
  f.b_box = b_box;
  const fs::path dir = fs::temp_directory_path() / ("pdiff_acceptance_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "problem.json") << serialize_problem_file(f);
  const std::string problem = (dir / "problem.json").string(), bundle = (dir / "bundle").string();
  const char* argv[] = {"pdiff", "solve", problem.c_str(), "--out", bundle.c_str(), "--verify-res", "200"};
  std::ostringstream out, err;
  const int code = run_cli(7, argv, out, err);
  *out_text = out.str();
  *err_text = err.str();
  fs::remove_all(dir);
  return code;
}

Criterion Degenerate() {
  Criterion c{"degenerate"};
  std::string out, err;
  int code = SolveExitCode("0.25 - (x1 - 1)^2 - x2^2", Box{Eigen::Vector2d(0.5, -0.5), Eigen::Vector2d(1.5, 0.5)},
                           "offcenter", &out, &err);
  c.Check(code == 0 && err.find("does not contain the origin") != std::string::npos,
          Fmt("off-center B: exit %d, warning %s", code,
              err.find("does not contain the origin") != std::string::npos ? "emitted" : "missing"));
  code = SolveExitCode("9 - x1^2 - x2^2", Box{Eigen::Vector2d(-3, -3), Eigen::Vector2d(3, 3)}, "empty", &out,
                       &err);
  c.Check(code == 0 && out.find("C is empty") != std::string::npos,
          Fmt("radius-3 B: exit %d, %s", code, out.find("C is empty") != std::string::npos ? "empty" : "not empty"));
  return c;
}

}  // namespace
}  // namespace pdiff

int main(int argc, char** argv) {
  using namespace pdiff;
  const bool long_running = argc > 1 && std::strcmp(argv[1], "--long-running") == 0;
  IdentityLog log;
  std::vector<Criterion> results;
  results.push_back(DiskOracle(log));
  results.push_back(Regressions(log, long_running));
  results.push_back(SolverOracle());
  results.push_back(ObjectiveEquivalence());
  results.push_back(Monotonicity(log));
  results.push_back(Degenerate());
  results.insert(results.begin() + 2, Identity(log));
  int failures = 0;
  for (const Criterion& c : results) {
    std::printf("%s %s: %s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
    if (!c.pass) ++failures;
  }
  std::fflush(stdout);
  return failures == 0 ? 0 : 1;
}
