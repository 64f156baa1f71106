// Acceptance checks, one per criterion. Prints one PASS/FAIL line per
// criterion; exit status is nonzero if any selected criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "oncodyn/basin.hpp"
#include "oncodyn/equilibrium.hpp"
#include "oncodyn/lyapunov.hpp"
#include "oncodyn/multipoint_ivp.hpp"
#include "oncodyn/sampling.hpp"
#include "oncodyn/tumor_model.hpp"

using namespace oncodyn;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Options {
  std::string cli;
  std::string config;
  std::string workdir = "acceptance_runs";
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string mat_str(const Mat3& m) {
  std::string s = "[";
  for (std::size_t i = 0; i < 3; ++i) {
    s += i ? "; " : "";
    for (std::size_t j = 0; j < 3; ++j) s += (j ? " " : "") + fmt("%.6g", m(i, j));
  }
  return s + "]";
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

// Routh-Hurwitz test on the characteristic polynomial
// l^3 + c2 l^2 + c1 l + c0 built from trace, principal minors and determinant.
bool hurwitz(const Mat3& a) {
  const double tr = a(0, 0) + a(1, 1) + a(2, 2);
  const double minors = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0) + a(0, 0) * a(2, 2) -
                        a(0, 2) * a(2, 0) + a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1);
  const double det = a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
                     a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
                     a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
  const double c2 = -tr, c1 = minors, c0 = -det;
  return c2 > 0 && c0 > 0 && c2 * c1 > c0;
}

Vec3 written_rhs(const ModelParams& p, const Vec3& x, double s2) {
  const double x1 = x[0], x2 = x[1], x3 = x[2];
  return {p.r1 * x1 * (1 - x1 / p.k1) - p.a12 * x1 * x2 - p.a13 * x1 * x3,
          p.r2 * x2 * (1 - x2 / p.k2) + s2 * p.a21 * x1 * x2,
          p.r3 * x1 * x3 / (x1 + p.k3) - p.a31 * x1 * x3 - p.d3 * x3};
}

// 1 -------------------------------------------------------------------------
Outcome multipoint_linear_oracle(const Options&) {
  const auto start = std::chrono::steady_clock::now();
  const VectorField f = [](const Vec3& x) { return -1.0 * x; };
  MultipointCondition c;
  c.t0 = 0.0;
  c.x0 = {1.0, 1.0, 1.0};
  c.alphas = {{0.5, 0.5, 0.5}};
  c.phase_times = {0.1};
  c.delta = 1.0;
  const MultipointSolution s = solve_multipoint(f, c, 0.1);
  const double oracle = 1.0 / (1.0 - 0.5 * std::exp(-0.1));
  const double err = (s.v0 - Vec3{oracle, oracle, oracle}).norm_inf();
  const double secs = seconds_since(start);
  return {err < 1e-8 && secs < 1.0,
          "v0=" + fmt("%.15f", s.v0[0]) + " oracle=" + fmt("%.15f", oracle) +
              " err=" + fmt("%.2e", err) + " time=" + fmt("%.3fs", secs)};
}

// 2 -------------------------------------------------------------------------
Outcome multipoint_reduction(const Options&) {
  Rng rng(20240501);
  double worst = 0.0;
  for (int sc = 0; sc < 10; ++sc) {
    ModelParams p;
    for (double* v : {&p.r1, &p.r2, &p.r3, &p.k1, &p.k2, &p.k3, &p.a12, &p.a13, &p.a21, &p.a31,
                      &p.d3}) {
      *v *= rng.uniform(0.5, 1.5);
    }
    const RateModel m = concrete_model(p);
    MultipointCondition c;
    c.t0 = rng.uniform(0.0, 1.0);
    c.x0 = {rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
    c.delta = 0.5;
    for (int k = 0; k < 2; ++k) {
      c.alphas.push_back({0.0, 0.0, 0.0});
      c.phase_times.push_back(c.t0 + rng.uniform(-0.45, 0.45));
    }
    const double t_end = c.t0 + 30.0;
    const MultipointSolution s = solve_multipoint(m, c, t_end);
    const Trajectory ref = integrate(as_vector_field(m), c.x0, c.t0, t_end);
    for (int i = 0; i < 100; ++i) {
      const double t = c.t0 + (t_end - c.t0) * i / 99.0;
      worst = std::max(worst, (s.trajectory.at(t) - ref.at(t)).norm_inf());
    }
  }
  return {worst < 1e-10, "max deviation over 10 scenarios x 100 times = " + fmt("%.3e", worst)};
}

// 3 -------------------------------------------------------------------------
Outcome lyapunov_residual_and_closed_forms(const Options&) {
  Rng rng(777);
  double worst_residual = 0.0;
  int n = 0;
  while (n < 1000) {
    Mat3 a;
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) a(i, j) = rng.uniform(-3.0, 3.0);
    if (!hurwitz(a)) continue;
    worst_residual = std::max(worst_residual, lyapunov_residual(solve_lyapunov(a), a));
    ++n;
  }

  // Death-type pattern: zeros at (1,3), (2,1), (2,3), (3,2).
  double death_worst = 0.0;
  double p22_negation_worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    Mat3 a = Mat3::diag(rng.uniform(-2.0, -0.2), rng.uniform(-2.0, -0.2), rng.uniform(-2.0, -0.2));
    a(0, 1) = rng.uniform(-2.0, 2.0);
    a(2, 0) = rng.uniform(-2.0, 2.0);
    const SymMat3 exact = solve_lyapunov(a);
    const SymMat3 cf = closed_form_p(a, ClosedFormPattern::Death);
    for (double d : {cf.p11 - exact.p11, cf.p12 - exact.p12, cf.p13 - exact.p13,
                     cf.p23 - exact.p23, cf.p33 - exact.p33}) {
      death_worst = std::max(death_worst, std::abs(d));
    }
    p22_negation_worst = std::max(p22_negation_worst, std::abs(cf.p22 + exact.p22));
  }

  // Tumor-only pattern: zeros at (1,3), (2,3), (3,2).
  double tumor_worst = 0.0;
  std::string counterexample;
  std::string bad_entries;
  for (int i = 0; i < 1000; ++i) {
    Mat3 a = Mat3::diag(rng.uniform(-2.0, -0.2), rng.uniform(-2.0, -0.2), rng.uniform(-2.0, -0.2));
    a(0, 1) = rng.uniform(-1.0, 1.0);
    a(1, 0) = rng.uniform(-1.0, 1.0);
    a(2, 0) = rng.uniform(-1.0, 1.0);
    if (!hurwitz(a)) continue;
    SymMat3 cf;
    try {
      cf = closed_form_p(a, ClosedFormPattern::TumorOnly);
    } catch (const Error&) {
      continue;
    }
    const SymMat3 exact = solve_lyapunov(a);
    const auto ce = cf.entries();
    const auto ee = exact.entries();
    static const char* names[6] = {"p11", "p12", "p13", "p22", "p23", "p33"};
    double local = 0.0;
    std::string entries;
    for (std::size_t k = 0; k < 6; ++k) {
      const double d = std::abs(ce[k] - ee[k]);
      if (d > 1e-12) entries += std::string(entries.empty() ? "" : ",") + names[k];
      local = std::max(local, d);
    }
    if (local > tumor_worst) {
      tumor_worst = local;
      counterexample = mat_str(a);
      bad_entries = entries;
    }
  }

  const bool residual_ok = worst_residual < 1e-10;
  const bool death_ok = death_worst < 1e-12 && p22_negation_worst < 1e-12;
  const bool tumor_ok = tumor_worst < 1e-12;
  std::string detail = "max residual=" + fmt("%.2e", worst_residual) +
                       "; death-pattern max dev=" + fmt("%.2e", death_worst) +
                       ", p22 vs -exact=" + fmt("%.2e", p22_negation_worst) +
                       "; tumor-only max dev=" + fmt("%.3e", tumor_worst);
  if (!tumor_ok) detail += " (entries " + bad_entries + " differ; e.g. A=" + counterexample + ")";
  return {residual_ok && death_ok && tumor_ok, detail};
}

// 4 -------------------------------------------------------------------------
Outcome equilibrium_catalog(const Options&) {
  const ModelParams p;
  const auto list = closed_form_equilibria(p);
  // Independent oracle: a31 x^2 + (a31 k3 + d3 - r3) x + d3 k3 = 0, smaller root.
  const long double a = p.a31, b = p.a31 * p.k3 + p.d3 - p.r3, c = p.d3 * p.k3;
  const long double x1 = (-b - std::sqrt(b * b - 4 * a * c)) / (2 * a);
  const double x1_oracle = static_cast<double>(x1);
  const double x3_oracle = static_cast<double>((p.r1 / p.a13) * (1 - x1 / p.k1));

  std::map<EquilibriumKind, Vec3> expected{{EquilibriumKind::Death, {0, 0, 0}},
                                           {EquilibriumKind::TumorOnly, {1, 0, 0}},
                                           {EquilibriumKind::Healthy, {0, 1, 0}},
                                           {EquilibriumKind::TumorImmune, {x1_oracle, 0, x3_oracle}}};
  bool ok = list.size() == expected.size();
  std::string detail;
  for (const auto& e : list) {
    const double rhs = written_rhs(p, e.point, -1.0).norm_inf();
    const auto it = expected.find(e.kind);
    const double dev = it == expected.end() ? INFINITY : (e.point - it->second).norm_inf();
    const double tol = e.kind == EquilibriumKind::TumorImmune ? 1e-9 : 0.0;
    ok = ok && rhs < 1e-10 && dev <= tol;
    detail += std::string(to_string(e.kind)) + "(" + fmt("%.12g", e.point[0]) + "," +
              fmt("%.12g", e.point[1]) + "," + fmt("%.12g", e.point[2]) + ") rhs=" +
              fmt("%.1e", rhs) + "; ";
  }
  detail += "x1 oracle=" + fmt("%.15f", x1_oracle);
  return {ok, detail};
}

// 5 -------------------------------------------------------------------------
struct SoundnessTally {
  int accepted = 0;
  int failures = 0;
  std::string example;
};

SoundnessTally soundness(Rng& rng, const std::function<Mat3(Rng&)>& draw,
                         const std::function<CriterionResult(const Mat3&)>& test) {
  SoundnessTally t;
  long attempts = 0;
  while (t.accepted < 1000 && attempts < 10'000'000) {
    ++attempts;
    const Mat3 a = draw(rng);
    if (test(a).verdict != CriterionVerdict::StableByCriterion) continue;
    ++t.accepted;
    if (!hurwitz(a)) {
      ++t.failures;
      if (t.example.empty()) t.example = mat_str(a);
    }
  }
  return t;
}

Outcome classification_soundness(const Options&) {
  Rng rng(5150);
  auto u = [](Rng& r) { return r.uniform(-2.0, 2.0); };
  struct Family {
    std::string name;
    std::function<Mat3(Rng&)> draw;
    std::function<CriterionResult(const Mat3&)> test;
  };
  const std::vector<Family> families{
      {"diagonal (death pattern)",
       [&](Rng& r) {
         Mat3 a = Mat3::diag(u(r), u(r), u(r));
         a(0, 1) = u(r);
         a(2, 0) = u(r);
         return a;
       },
       diagonal_sign_test},
      {"block, b21=b12",
       [&](Rng& r) {
         Mat3 a = Mat3::diag(u(r), u(r), u(r));
         a(0, 1) = a(1, 0) = u(r);
         a(2, 0) = u(r);
         return a;
       },
       symmetric_block_test},
      {"block, b21=0",
       [&](Rng& r) {
         Mat3 a = Mat3::diag(u(r), u(r), u(r));
         a(0, 1) = u(r);
         a(2, 0) = u(r);
         return a;
       },
       symmetric_block_test},
      {"cubic, d21=d12",
       [&](Rng& r) {
         Mat3 a = Mat3::diag(u(r), u(r), u(r));
         a(0, 1) = a(1, 0) = u(r);
         a(0, 2) = u(r);
         a(2, 0) = u(r);
         return a;
       },
       tumor_immune_cubic_test},
      {"cubic, d21=0",
       [&](Rng& r) {
         Mat3 a = Mat3::diag(u(r), u(r), u(r));
         a(0, 1) = u(r);
         a(0, 2) = u(r);
         a(2, 0) = u(r);
         return a;
       },
       tumor_immune_cubic_test},
  };

  bool ok = true;
  std::string detail;
  for (const auto& fam : families) {
    const SoundnessTally t = soundness(rng, fam.draw, fam.test);
    ok = ok && t.accepted == 1000 && t.failures == 0;
    detail += fam.name + ": " + std::to_string(t.failures) + "/" + std::to_string(t.accepted) +
              " non-Hurwitz";
    if (!t.example.empty()) detail += " e.g. " + t.example;
    detail += "; ";
  }

  // Instability clause of the diagonal test: every hit must have an eigenvalue
  // with positive real part.
  int unstable_hits = 0, unstable_wrong = 0;
  while (unstable_hits < 1000) {
    Mat3 a = Mat3::diag(u(rng), u(rng), u(rng));
    a(0, 1) = u(rng);
    a(2, 0) = u(rng);
    if (diagonal_sign_test(a).verdict != CriterionVerdict::UnstableByCriterion) continue;
    ++unstable_hits;
    double max_re = -INFINITY;
    for (const Complex& l : eigenvalues_3x3(a)) max_re = std::max(max_re, l.real());
    if (!(max_re > 0.0)) ++unstable_wrong;
  }
  ok = ok && unstable_wrong == 0;
  detail += "diagonal instability clause: " + std::to_string(unstable_wrong) + "/1000 wrong";
  return {ok, detail};
}

// 6 -------------------------------------------------------------------------
Outcome stability_simulation_agreement(const Options&) {
  const auto start = std::chrono::steady_clock::now();
  ModelParams p;
  p.a12 = 2.0;
  const RateModel m = concrete_model(p);
  const VectorField f = as_vector_field(m);
  const Vec3 healthy{0, 1, 0};
  const StabilityReport hs = classify(m, {healthy, EquilibriumKind::Healthy, 0.0});
  const StabilityReport os = classify(m, {{0, 0, 0}, EquilibriumKind::Death, 0.0});

  Rng rng(606);
  int converged = 0;
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    Vec3 d;
    do {
      d = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    } while (d.norm2() > 1.0 || d.norm2() == 0.0);
    Vec3 x = healthy + 1e-3 * d;
    x[0] = std::abs(x[0]);
    x[2] = std::abs(x[2]);
    const double dist = (integrate(f, x, 0.0, 200.0).final_state() - healthy).norm2();
    worst = std::max(worst, dist);
    if (dist < 1e-6) ++converged;
  }

  const Trajectory away = integrate(f, {1e-3, 1e-3, 1e-3}, 0.0, 50.0);
  double max_dist = 0.0;
  for (const auto& s : away.samples()) max_dist = std::max(max_dist, s.x.norm2());
  const bool escaped = max_dist > 0.1;

  const double secs = seconds_since(start);
  const bool ok = hs.eig_class == EigenClass::Stable && converged == 50 &&
                  os.eig_class == EigenClass::Unstable && escaped && secs < 30.0;
  return {ok, "healthy " + std::string(to_string(hs.eig_class)) + ", " +
                  std::to_string(converged) + "/50 converged (max dist " + fmt("%.2e", worst) +
                  "); origin " + std::string(to_string(os.eig_class)) +
                  ", perturbed start reaches |x|=" + fmt("%.3f", max_dist) +
                  "; time=" + fmt("%.2fs", secs)};
}

// 7 -------------------------------------------------------------------------
Outcome basin_certificate(const Options&) {
  const auto start = std::chrono::steady_clock::now();
  ModelParams p;
  p.a12 = 2.0;
  const RateModel m = concrete_model(p);
  const LyapunovCertificate cert = make_certificate(m, {{0, 1, 0}, EquilibriumKind::Healthy, 0.0});
  std::string detail;
  bool ok = true;
  for (std::uint64_t seed : {11ULL, 12345ULL}) {
    const double r = verified_decrease_radius(m, cert, 2.0, 2000, seed);
    const double C = level_from_radius(cert, r);
    SamplingPlan plan;
    plan.seed = seed;
    plan.n_samples = 10000;
    plan.horizon = 200.0;
    plan.threads = static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
    const BasinCertificate b = monte_carlo_verify(m, cert, C, plan);
    ok = ok && b.mc_total == 10000 && b.mc_escaped_or_undecided == 0;
    detail += "seed " + std::to_string(seed) + ": r=" + fmt("%.6f", r) + " C=" + fmt("%.6f", C) +
              " converged=" + std::to_string(b.mc_converged) +
              " escaped_or_undecided=" + std::to_string(b.mc_escaped_or_undecided) + "; ";
  }
  const double secs = seconds_since(start);
  ok = ok && secs < 300.0;
  return {ok, detail + "time=" + fmt("%.1fs", secs)};
}

// 8 -------------------------------------------------------------------------
Outcome positivity_invariance(const Options&) {
  const RateModel m = concrete_model(ModelParams{});
  const VectorField f = as_vector_field(m);
  Rng rng(808);
  double lowest = INFINITY;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 x0{rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1)};
    const Trajectory tr = integrate(f, x0, 0.0, 100.0);
    const auto& s = tr.samples();
    for (std::size_t k = 0; k < s.size(); ++k) {
      lowest = std::min(lowest, s[k].x.min_component());
      if (k + 1 < s.size()) {
        for (double w : {0.25, 0.5, 0.75}) {
          lowest = std::min(lowest, tr.at(s[k].t + w * (s[k + 1].t - s[k].t)).min_component());
        }
      }
    }
  }
  return {lowest >= -1e-9, "minimum component over 1000 trajectories = " + fmt("%.3e", lowest)};
}

// 9 -------------------------------------------------------------------------
Outcome dissipativity_probe(const Options&) {
  const ModelParams p;
  const int n = 11;
  std::string detail;
  bool ok = true;
  for (H2Sign sign : {H2Sign::GeneralMinus, H2Sign::PrintedPlus}) {
    const double s2 = sign == H2Sign::GeneralMinus ? -1.0 : 1.0;
    const StructuralReport rep = verify_structural(concrete_model(p, sign), {1, 1, 1}, n);
    double oracle = -INFINITY;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          const double x1 = i / double(n - 1), x2 = j / double(n - 1), x3 = k / double(n - 1);
          const double div = p.r1 * (1 - 2 * x1 / p.k1) + p.r2 * (1 - 2 * x2 / p.k2) +
                             s2 * p.a21 * x1 - p.a12 * x2 - p.a13 * x3 +
                             p.r3 * x1 / (x1 + p.k3) - p.a31 * x1 - p.d3;
          oracle = std::max(oracle, div);
        }
    const double dev = std::abs(rep.divergence_max - oracle);
    ok = ok && dev <= 1e-12;
    detail += std::string(sign == H2Sign::GeneralMinus ? "general_minus" : "paper_plus") +
              ": divergence_max=" + fmt("%.15g", rep.divergence_max) +
              " oracle=" + fmt("%.15g", oracle) + "; ";
  }
  return {ok, detail};
}

// 10 ------------------------------------------------------------------------
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism(const Options& opt) {
  if (opt.cli.empty() || opt.config.empty()) return {false, "needs --cli and --config"};
  const fs::path base = fs::path(opt.workdir) / "determinism";
  fs::remove_all(base);
  struct RunSpec {
    std::string name;
    int threads;
  };
  const std::vector<RunSpec> runs{{"t1a", 1}, {"t1b", 1}, {"t8", 8}};
  for (const auto& r : runs) {
    const std::string cmd = opt.cli + " analyze " + opt.config + " --out " +
                            (base / r.name).string() + " --threads " + std::to_string(r.threads) +
                            " >/dev/null 2>&1";
    const int raw = std::system(cmd.c_str());
    const int status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    if (status != 0) return {false, "run " + r.name + " exited with " + std::to_string(status)};
  }
  std::string detail;
  bool ok = true;
  for (const auto& entry : fs::directory_iterator(base / "t1a")) {
    const std::string name = entry.path().filename().string();
    if (name == "timings.json") continue;
    const std::string ref = slurp(entry.path());
    for (const char* other : {"t1b", "t8"}) {
      const bool same = ref == slurp(base / other / name);
      ok = ok && same;
      if (!same) detail += name + " differs in " + other + "; ";
    }
  }
  const std::size_t bytes = slurp(base / "t1a" / "report.json").size();
  if (ok) detail = "report.json (" + std::to_string(bytes) + " bytes) and CSVs identical for 1/1/8 threads";
  return {ok && bytes > 0, detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  int criterion = 0;
  Options opt;
  app.add_option("--criterion", criterion, "Run a single criterion (1-10); 0 runs all")
      ->check(CLI::Range(0, 10));
  app.add_option("--cli", opt.cli, "Path to the command-line tool");
  app.add_option("--config", opt.config, "Scenario used by the determinism check");
  app.add_option("--workdir", opt.workdir, "Scratch directory for CLI runs");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome(const Options&)>>> checks{
      {"multipoint linear oracle", multipoint_linear_oracle},
      {"multipoint reduction to the classical problem", multipoint_reduction},
      {"Lyapunov residual and closed forms", lyapunov_residual_and_closed_forms},
      {"equilibrium catalog", equilibrium_catalog},
      {"classification soundness", classification_soundness},
      {"stability/simulation agreement", stability_simulation_agreement},
      {"basin certificate", basin_certificate},
      {"positivity invariance", positivity_invariance},
      {"dissipativity probe", dissipativity_probe},
      {"determinism", determinism},
  };

  int failures = 0;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (criterion != 0 && criterion != id) continue;
    Outcome out;
    try {
      out = checks[i].second(opt);
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %d: %s - %s: %s\n", id, out.pass ? "PASS" : "FAIL",
                checks[i].first.c_str(), out.detail.c_str());
    std::fflush(stdout);
    if (!out.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
