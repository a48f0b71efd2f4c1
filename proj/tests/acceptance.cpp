// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "plsgd/errors.hpp"
#include "plsgd/experiment.hpp"
#include "plsgd/verify.hpp"
#include "test_support.hpp"
#include "theory_fixtures.hpp"

using namespace plsgd;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

const fs::path kSource = PLSGD_SOURCE_DIR;
const fs::path kCli = PLSGD_CLI_PATH;

ExperimentSummary run_config(const std::string& name) {
  return run_experiment(load_config(kSource / "configs" / name));
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Outcome poisson_residual_check() {
  Rng rng = make_rng(101);
  double worst_res = 0, worst_series = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 2 + static_cast<std::size_t>(uniform01(rng) * 49);
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(uniform01(rng) * 4);
    auto chain = std::make_shared<FiniteChain>(testutil::random_kernel(n, rng));
    Matrix g(static_cast<Eigen::Index>(n), d);
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = standard_normal(rng);
    const PoissonSolution sol = PoissonSolver(chain).solve_centered(g);
    worst_res = std::max(worst_res, poisson_residual(sol));

    Matrix term = g.rowwise() - sol.grad_f.transpose();
    Matrix series = Matrix::Zero(g.rows(), g.cols());
    for (int k = 0; k < 200; ++k) {
      series += term;
      term = chain->transition() * term;
    }
    const Matrix F = fundamental_matrix(*chain);
    const Matrix via_F = F * (g.rowwise() - sol.grad_f.transpose());
    worst_series = std::max(worst_series, (via_F - series).cwiseAbs().maxCoeff());
  }
  return {worst_res <= 1e-10 && worst_series <= 1e-8,
          "max residual " + fmt("%.3g", worst_res) + ", series gap " + fmt("%.3g", worst_series)};
}

Outcome mixing_check() {
  Rng rng = make_rng(202);
  int bad = 0, largest = 0;
  for (int rep = 0; rep < 50; ++rep) {
    // Dense kernels mix in a step or two; two-cluster kernels mix slowly.
    const FiniteChain c = rep % 2 == 0
                              ? FiniteChain(testutil::random_kernel(2 + static_cast<std::size_t>(uniform01(rng) * 49), rng, 0.9))
                              : FiniteChain(testutil::clustered_kernel(1 + static_cast<std::size_t>(uniform01(rng) * 25),
                                                                       0.01 + 0.3 * uniform01(rng), rng));
    const int t = mixing_time(c);
    largest = std::max(largest, t);
    const Vector pi = stationary(c).as_vector();
    Matrix Pk = Matrix::Identity(c.transition().rows(), c.transition().cols());
    for (int k = 1; k <= 10 * t; ++k) {
      Pk = Pk * c.transition();
      const double worst = (Pk.rowwise() - pi.transpose()).rowwise().lpNorm<1>().maxCoeff();
      if (worst > std::ldexp(1.0, -(k / t)) + 1e-12) ++bad;
    }
  }
  bool cycle_rejected = false;
  Matrix cyc(2, 2);
  cyc << 0, 1, 1, 0;
  try {
    mixing_time(FiniteChain(cyc));
  } catch (const MixingTimeNotFound&) {
    cycle_rejected = true;
  }
  return {bad == 0 && cycle_rejected, std::to_string(bad) + " violations, largest t_mix " + std::to_string(largest) +
                                          ", 2-cycle " + (cycle_rejected ? "rejected" : "accepted")};
}

Outcome lemma_suite() {
  VerifyOptions opts;
  opts.samples = 1000;
  opts.path_length = 10000;
  std::string detail;
  bool ok = true;
  std::size_t checks = 0;
  for (const char* name : {"token.yaml", "subsample.yaml", "sysid.yaml"}) {
    const auto problem = build_problem(load_config(kSource / "configs" / name).problem);
    const Report r = verify_problem(*problem, opts);
    checks += r.checks().size();
    for (const Check& c : r.checks()) {
      if (!c.passed()) detail += " " + problem->kind() + ":" + c.name;
    }
    ok = ok && r.passed();
  }
  return {ok, std::to_string(checks) + " checks" + (detail.empty() ? ", none failed" : ", failed:" + detail)};
}

Outcome rate_check() {
  bool ok = true;
  std::string detail;
  for (const char* name : {"token.yaml", "subsample.yaml", "sysid.yaml"}) {
    const ExperimentSummary s = run_config(name);
    const bool pass = s.fit && s.passed() && s.trials == 200 && s.mean.size() == 100001;
    ok = ok && pass;
    detail += std::string(detail.empty() ? "" : "; ") + s.problem.value("kind", "?") + " slope " +
              (s.fit ? fmt("%.4f", s.fit->slope) + " r2 " + fmt("%.4f", s.fit->r2) : "n/a");
  }
  return {ok, detail};
}

Outcome expected_check() {
  const ExperimentSummary s = run_config("token_expected.yaml");
  if (!s.expected) return {false, "expected audit did not run"};
  const bool k0_ok = s.theory && s.schedule.K0 >= s.theory->K0_expected_required;
  return {s.expected->passed() && k0_ok && s.trials == 200,
          std::to_string(s.expected->violations) + " violations; tightest k " + std::to_string(s.expected->worst_k) +
              ": " + fmt("%.4g", s.expected->worst_lhs) + " <= " + fmt("%.4g", s.expected->worst_rhs)};
}

Outcome envelope_check() {
  bool ok = true;
  std::string detail;
  for (const char* name : {"token_envelope_05.yaml", "token_envelope_025.yaml"}) {
    const ExperimentSummary s = run_config(name);
    if (!s.envelope || !s.inverted) return {false, std::string(name) + ": audit did not run"};
    ok = ok && s.envelope->passed() && !s.inverted->passed() && s.trials == 400;
    detail += std::string(detail.empty() ? "" : "; ") + "delta " + fmt("%.2f", s.delta) + " fraction " +
              fmt("%.4f", s.envelope->fraction) + " <= " + fmt("%.4f", s.envelope->threshold) + ", inverted " +
              fmt("%.4f", s.inverted->fraction);
  }
  return {ok, detail};
}

Outcome stationary_mean_check() {
  const TokenBuild tb = make_token_problem(TokenSpec{});
  const TokenRegression& p = *tb.problem;
  Rng rng = make_rng(707);
  double token_gap = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const Vector theta = p.minimizer() + 5.0 * normal_vector(rng, p.dim());
    Vector sum = Vector::Zero(p.dim());
    for (std::size_t i = 0; i < p.nodes(); ++i) sum += p.weights()[i] * token_grad(p, theta, i);
    const Vector direct = p.stacked_A().transpose() * (p.stacked_A() * theta - p.stacked_b()) /
                          static_cast<double>(p.total_rows());
    token_gap = std::max(token_gap, (sum - direct).norm() / std::max(1.0, direct.norm()));
  }

  // N = 3, b = 2: all 8 joint states with product weights.
  Matrix X(3, 2);
  X << 0.8, -0.4, 0.3, 1.2, -1.0, 0.5;
  const Vector y = (Vector(3) << 0.1, -0.7, 0.4).finished();
  double mean_gap = 0, empty_gap = 0;
  for (double rho : {0.2, 0.5, 0.8}) {
    SubsampleRegression m(X, y, 2, rho);
    const Distribution pi = bminsep_stationary(2, rho);
    const Vector w = normal_vector(rng, 2);
    Vector mean = Vector::Zero(2);
    double p_empty = 0;
    for (int code = 0; code < 8; ++code) {
      SubsampleState s{{code & 1, (code >> 1) & 1, (code >> 2) & 1}, {}, 2, rho};
      double weight = 1;
      for (int z : s.zeta) {
        s.selected.push_back(z == 1);
        weight *= pi[static_cast<std::size_t>(z)];
      }
      mean += weight * subsample_grad(m, w, s);
      if (s.batch_size() == 0) p_empty += weight;
    }
    const Vector full = m.loss_gradient(w);
    mean_gap = std::max(mean_gap, (mean - m.gradient(w)).norm());
    empty_gap = std::max(empty_gap, ((full - mean) - p_empty * full).norm());
  }
  return {token_gap <= 1e-10 && mean_gap <= 1e-12 && empty_gap <= 1e-12,
          "token " + fmt("%.2g", token_gap) + ", subsample mean " + fmt("%.2g", mean_gap) + ", empty-batch term " +
              fmt("%.2g", empty_gap)};
}

Outcome constants_check() {
  using namespace fixtures;
  double worst = 0;
  auto cmp = [&](double got, double want) { worst = std::max(worst, testutil::rel_err(got, want)); };
  const TheoryInputs in = worked();
  const DConstants d = d_constants(in);
  cmp(d.m1, kM1);
  cmp(d.m2, kM2);
  cmp(d.m3, kM3);
  cmp(d.m4, kM4);
  cmp(d.D1, kD1);
  cmp(d.D2, kD2);
  const GammaConstants g = gamma_constants(in, d);
  cmp(g.nu1, kNu1);
  cmp(g.nu2, kNu2);
  cmp(g.Gamma1, kGamma1);
  cmp(g.Gamma2, kGamma2At1000);
  cmp(k0_lower_bound(in), kK0High);
  cmp(expected_k0_lower_bound(in), kK0Expected);
  cmp(hp_envelope(compute_theory(worked(kK0High)), 100), kEnvelopeAt100);
  cmp(expected_bound(compute_theory(worked(kK0Expected)), 1000), kExpectedAt1000);
  const MartingaleConstants m = martingale_only_constants(in);
  cmp(m.nu1, kMartNu1);
  cmp(m.nu2, kMartNu2);
  cmp(m.Gamma1, kMartGamma1);
  cmp(m.Gamma2, kMartGamma2At1000);
  cmp(m.K0_required, kMartK0);
  return {worst <= 1e-12, "19 values, worst relative error " + fmt("%.2g", worst)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism_check() {
  const fs::path dir = fs::temp_directory_path() / "plsgd_acceptance_determinism";
  fs::create_directories(dir);
  const fs::path config = kSource / "configs" / "token.yaml";
  struct Run {
    std::string threads, tag;
  };
  const std::vector<Run> runs{{"1", "a"}, {"1", "b"}, {"8", "c"}};
  for (const Run& r : runs) {
    const std::string cmd = "PLSGD_THREADS=" + r.threads + " \"" + kCli.string() + "\" run \"" + config.string() +
                            "\" --csv \"" + (dir / (r.tag + ".csv")).string() + "\" --json \"" +
                            (dir / (r.tag + ".json")).string() + "\" > /dev/null";
    const int rc = std::system(cmd.c_str());
    if (rc != 0) return {false, "cli exited with status " + std::to_string(rc) + " for threads " + r.threads};
  }
  const std::string csv = slurp(dir / "a.csv"), json = slurp(dir / "a.json");
  const bool ok = !csv.empty() && !json.empty() && csv == slurp(dir / "b.csv") && csv == slurp(dir / "c.csv") &&
                  json == slurp(dir / "b.json") && json == slurp(dir / "c.json");
  fs::remove_all(dir);
  return {ok, std::string(ok ? "identical" : "different") + " CSV (" + std::to_string(csv.size()) +
                  " bytes) and JSON across two runs and thread counts 1, 8"};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "poisson residual", 10, poisson_residual_check},
      {2, "mixing certification", 30, mixing_check},
      {3, "lemma and assumption suite", 120, lemma_suite},
      {4, "rate reproduction", 600, rate_check},
      {5, "expected-bound domination", 120, expected_check},
      {6, "uniform envelope audit", 300, envelope_check},
      {7, "stationary-mean identities", 10, stationary_mean_check},
      {8, "constants calculator", 1, constants_check},
      {9, "determinism", 180, determinism_check},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_s;
    const bool ok = out.ok && in_time;
    if (!ok) ++failed;
    std::printf("AC%d %s  %-28s %s [%.1fs / %.0fs%s]\n", c.id, ok ? "PASS" : "FAIL", c.name, out.detail.c_str(),
                secs, c.budget_s, in_time ? "" : " over budget");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
