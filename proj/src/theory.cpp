#include "plsgd/theory.hpp"

#include <algorithm>
#include <cmath>

#include "plsgd/errors.hpp"

namespace plsgd {

namespace {

const double kE = std::exp(1.0);

void require_mu_a_gt_1(const TheoryInputs& in) {
  if (!(in.mu * in.a > 1.0)) throw HypothesisViolated("constants need mu a > 1 (mu a = " + std::to_string(in.mu * in.a) + ")");
}

void require_two_mu_a_gt_3(const TheoryInputs& in) {
  if (!(2.0 * in.mu * in.a > 3.0)) {
    throw HypothesisViolated("constants need 2 mu a > 3 (2 mu a = " + std::to_string(2.0 * in.mu * in.a) + ")");
  }
}

void validate(const TheoryInputs& in) {
  if (!(in.mu > 0.0) || !(in.L > 0.0)) throw InvalidArgument("theory inputs need mu > 0 and L > 0");
  if (!(in.A >= 0.0 && in.B >= 0.0 && in.C >= 0.0 && in.Lg >= 0.0)) {
    throw InvalidArgument("theory inputs need nonnegative A, B, C and Lg");
  }
  if (!(in.tmix >= 1.0) || !(in.d >= 1.0)) throw InvalidArgument("theory inputs need tmix >= 1 and d >= 1");
  if (!(in.a > 0.0) || !(in.K0 > 0.0)) throw InvalidArgument("theory inputs need a > 0 and K0 > 0");
  if (!(in.delta > 0.0 && in.delta < 1.0)) throw InvalidArgument("delta must lie in (0, 1)");
  if (!(in.Delta0 >= 0.0)) throw InvalidArgument("Delta0 must be nonnegative");
}

double xlogx_guard(double x, double inner) { return x == 0.0 ? 0.0 : x * std::log(inner); }

}  // namespace

TheoryInputs theory_inputs(const Problem& problem, const StepSchedule& schedule, double delta) {
  const ProblemConstants& c = problem.constants();
  TheoryInputs in;
  in.mu = c.mu;
  in.L = c.L;
  in.A = c.A;
  in.B = c.B;
  in.C = c.C;
  in.Lg = c.Lg;
  in.tmix = static_cast<double>(problem.mixing().tmix);
  in.d = static_cast<double>(problem.dim());
  in.a = schedule.a;
  in.K0 = schedule.K0;
  in.delta = delta;
  in.Delta0 = std::max(0.0, problem.suboptimality(problem.initial_point()));
  return in;
}

DConstants d_constants(const TheoryInputs& in) {
  validate(in);
  require_mu_a_gt_1(in);
  const double u = in.u();
  const double L = in.L, C = in.C, t = in.tmix, sd = std::sqrt(in.d), a = in.a;
  DConstants dc;
  if (u > 0.0) {
    dc.m1 = 2.0 * std::sqrt(2.0 * u / L);
    dc.m2 = 2.0 * std::sqrt(L * C * C / (2.0 * u));
  } else if (C > 0.0) {
    dc.m1 = 2.0;
    dc.m2 = C;
  }
  dc.m3 = 2.0 * std::sqrt(2.0 * u / L) + 2.0 * u / L + (C > 0.0 ? 2.0 : 0.0);
  dc.m4 = 2.0 * C;
  const double shrink = in.mu * a - 1.0;
  dc.D1 = 2.0 * a * dc.m1 * t * L * sd * in.Delta0 + 10.0 * a * dc.m2 * t * sd +
          kE * a * a * dc.m4 * t * (L + in.Lg) * sd / shrink;
  dc.D2 = 8.0 * a * dc.m1 * t * L * sd + kE * a * a * dc.m3 * t * (L + in.Lg) * L * sd / shrink;
  return dc;
}

GammaConstants gamma_constants(const TheoryInputs& in, const DConstants& dc) {
  validate(in);
  require_two_mu_a_gt_3(in);
  const double u = in.u();
  const double ae2 = (in.a * kE) * (in.a * kE);
  const double spread = in.tmix * in.tmix * in.d + 1.0;
  const double m_a = in.mu * in.a;
  GammaConstants g;
  double u_term = 0.0;
  if (u > 0.0) {
    u_term = u / (2.0 * m_a - 3.0) * (2.0 * in.Delta0 + dc.D1 / dc.D2 + kE * in.a * in.a * in.C * in.L / dc.D2);
  }
  g.nu1 = 32.0 * ae2 * in.L * spread * (u_term + in.C / (2.0 * m_a - 2.0));
  g.nu2 = 64.0 * ae2 * in.L * spread * u / (2.0 * m_a - 3.0);
  g.Gamma1 = kE * in.a * in.a * in.C * in.L + 2.0 * (dc.D1 + dc.D2 * in.Delta0);
  const double log2d = std::log(2.0 / in.delta);
  g.Kbar0 = in.K0 / log2d;
  g.logKbar0 = std::log(2.0 * in.K0 / in.delta) / log2d;
  g.Gamma2 = 4.0 * g.nu1 * (1.0 + 3.0 * g.logKbar0) + 2.0 * std::sqrt(g.nu1 * (g.Kbar0 * in.Delta0 + 2.0 * g.Gamma1));
  return g;
}

double k0_solver(double C, double delta) {
  if (!(C >= 1.0)) throw InvalidArgument("K0 solver needs C >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("delta must lie in (0, 1)");
  const double c1 = 12.0 * C * std::log(12.0 * C) + 6.0 * C;
  return c1 * std::log(2.0 * c1 / delta);
}

double K0Terms::max() const { return std::max({smoothness, mu_a, twice_D2, concentration}); }

K0Terms k0_terms(const TheoryInputs& in) {
  const DConstants dc = d_constants(in);
  const GammaConstants g = gamma_constants(in, dc);
  K0Terms t;
  t.smoothness = 0.5 * in.a * in.L * (2.0 * in.A + in.B / in.mu);
  t.mu_a = in.mu * in.a;
  t.twice_D2 = 2.0 * dc.D2;
  if (g.nu2 > 0.0) t.concentration = k0_solver(std::max(1.0, 4.0 * g.nu2), in.delta);
  return t;
}

double k0_lower_bound(const TheoryInputs& in) { return k0_terms(in).max(); }

K0Terms expected_k0_terms(const TheoryInputs& in) {
  const DConstants dc = d_constants(in);
  K0Terms t;
  t.smoothness = in.a * in.L * (2.0 * in.A + in.B / in.mu);
  t.mu_a = in.mu * in.a;
  t.twice_D2 = 2.0 * dc.D2;
  return t;
}

double expected_k0_lower_bound(const TheoryInputs& in) { return expected_k0_terms(in).max(); }

TheoryConstants compute_theory(const TheoryInputs& in) {
  TheoryConstants tc;
  tc.inputs = in;
  tc.d = d_constants(in);
  tc.gamma = gamma_constants(in, tc.d);
  tc.k0 = k0_terms(in);
  tc.k0_expected = expected_k0_terms(in);
  tc.K0_required = tc.k0.max();
  tc.K0_expected_required = tc.k0_expected.max();
  tc.hypotheses.a_ge_2_over_mu = in.a * in.mu >= 2.0 * (1.0 - 1e-12);
  tc.hypotheses.mu_a_gt_1 = in.mu * in.a > 1.0;
  tc.hypotheses.two_mu_a_gt_3 = 2.0 * in.mu * in.a > 3.0;
  tc.hypotheses.k0_feasible = in.K0 >= tc.K0_required;
  tc.hypotheses.k0_feasible_expected = in.K0 >= tc.K0_expected_required;
  return tc;
}

double lambda_numerator(const TheoryConstants& tc, std::size_t k) {
  const TheoryInputs& in = tc.inputs;
  const double G2 = tc.gamma.Gamma2;
  return in.K0 * in.Delta0 + tc.gamma.Gamma1 + G2 * std::log(2.0 * in.K0 / in.delta) +
         G2 * std::log(2.0 * static_cast<double>(k) / in.delta);
}

double hp_envelope(const TheoryConstants& tc, std::size_t k) {
  if (!tc.hypotheses.k0_feasible) {
    throw InfeasibleK0("K0 = " + std::to_string(tc.inputs.K0) + " is below the required " +
                       std::to_string(tc.K0_required));
  }
  if (k == 0) throw InvalidArgument("the high-probability envelope is defined for k >= 1");
  return lambda_numerator(tc, k) / (static_cast<double>(k) + tc.inputs.K0);
}

double good_event_bound(const TheoryConstants& tc, std::size_t k, double scale) {
  if (k == 0) {
    if (!tc.hypotheses.k0_feasible) throw InfeasibleK0("K0 is below the high-probability requirement");
    return scale * tc.inputs.Delta0;
  }
  return scale * hp_envelope(tc, k);
}

double expected_bound(const TheoryConstants& tc, std::size_t k) {
  if (!tc.hypotheses.k0_feasible_expected) {
    throw InfeasibleK0("K0 = " + std::to_string(tc.inputs.K0) + " is below the expected-bound requirement " +
                       std::to_string(tc.K0_expected_required));
  }
  const TheoryInputs& in = tc.inputs;
  const double num =
      in.Delta0 * (in.K0 + 2.0 * tc.d.D2) + kE * in.a * in.a * in.C * in.L + 2.0 * tc.d.D1;
  return num / (static_cast<double>(k) + in.K0);
}

MartingaleConstants martingale_only_constants(const TheoryInputs& in) {
  validate(in);
  require_two_mu_a_gt_3(in);
  const double ae2 = (in.a * kE) * (in.a * kE);
  const double m_a = in.mu * in.a;
  const double lead = (2.0 * in.L * (in.A + 1.0) + in.B) / (2.0 * m_a - 3.0);
  const double eacl = kE * in.a * in.a * in.C * in.L;
  MartingaleConstants m;
  m.nu1 = 8.0 * in.L * ae2 * (lead * in.Delta0 + in.C / (m_a - 1.0)) + eacl / 16.0;
  m.nu2 = 8.0 * in.L * ae2 * lead;
  m.Gamma1 = eacl / 2.0;
  m.Kbar0 = in.K0 / std::log(2.0 / in.delta);
  m.Gamma2 = 12.0 * (m.nu1 + xlogx_guard(m.nu1, 8.0 * m.nu1)) + 2.0 * std::sqrt(m.nu1 * (m.Kbar0 * in.Delta0 + eacl));
  const double conc = m.nu2 > 0.0 ? 8.0 * m.nu2 * std::log(16.0 * m.nu2 / in.delta) : 0.0;
  m.K0_required = std::max({0.5 * in.a * in.L * (2.0 * in.A + in.B / in.mu), m_a, conc});
  return m;
}

double martingale_envelope(const TheoryInputs& in, const MartingaleConstants& mc, std::size_t k) {
  if (in.K0 < mc.K0_required) throw InfeasibleK0("K0 is below the martingale-only requirement");
  if (k == 0) throw InvalidArgument("the martingale-only envelope is defined for k >= 1");
  return (in.Delta0 * in.K0 + mc.Gamma1 + mc.Gamma2 * std::log(2.0 * static_cast<double>(k) / in.delta)) /
         (static_cast<double>(k) + in.K0);
}

nlohmann::json TheoryConstants::to_json() const {
  const TheoryInputs& in = inputs;
  nlohmann::json j;
  j["inputs"] = {{"mu", in.mu}, {"L", in.L},         {"A", in.A},         {"B", in.B},
                 {"C", in.C},   {"Lg", in.Lg},       {"tmix", in.tmix},   {"d", in.d},
                 {"a", in.a},   {"K0", in.K0},       {"delta", in.delta}, {"Delta0", in.Delta0}};
  j["m"] = {d.m1, d.m2, d.m3, d.m4};
  j["D1"] = d.D1;
  j["D2"] = d.D2;
  j["nu1"] = gamma.nu1;
  j["nu2"] = gamma.nu2;
  j["Gamma1"] = gamma.Gamma1;
  j["Gamma2"] = gamma.Gamma2;
  j["Kbar0"] = gamma.Kbar0;
  j["logKbar0"] = gamma.logKbar0;
  j["K0_required"] = K0_required;
  j["K0_terms"] = {{"smoothness", k0.smoothness},
                   {"mu_a", k0.mu_a},
                   {"twice_D2", k0.twice_D2},
                   {"concentration", k0.concentration}};
  j["K0_expected_required"] = K0_expected_required;
  j["hypotheses"] = {{"a_ge_2_over_mu", hypotheses.a_ge_2_over_mu},
                     {"mu_a_gt_1", hypotheses.mu_a_gt_1},
                     {"two_mu_a_gt_3", hypotheses.two_mu_a_gt_3},
                     {"k0_feasible", hypotheses.k0_feasible},
                     {"k0_feasible_expected", hypotheses.k0_feasible_expected}};
  j["expected_bound_numerator"] =
      in.Delta0 * (in.K0 + 2.0 * d.D2) + kE * in.a * in.a * in.C * in.L + 2.0 * d.D1;
  return j;
}

Report abc_verify(const Problem& problem, const AbcVerifyOptions& options, Rng& rng) {
  const ProblemConstants& c = problem.constants();
  const Vector x_star = problem.minimizer();
  const Eigen::Index d = problem.dim();
  const double radius = options.radius > 0.0 ? options.radius : 1.0 + 2.0 * (problem.initial_point() - x_star).norm();
  const double tol = 1e-9;
  auto slack = [&](double v) { return tol * std::max(1.0, std::abs(v)); };

  Report report;
  std::unique_ptr<ChainCursor> cursor = problem.start(rng);
  const auto chain = problem.finite_chain();

  for (std::size_t s = 0; s < options.samples; ++s) {
    const Vector x = x_star + uniform_in_ball(rng, d, radius);
    const Vector x2 = x_star + uniform_in_ball(rng, d, radius);
    const Vector grad = problem.gradient(x);
    const double gsq = grad.squaredNorm();
    const double delta = problem.suboptimality(x);
    const double rhs = c.A * gsq + c.B * delta + c.C;
    report.record("abc.pl", 2.0 * c.mu * delta, gsq, slack(gsq));
    report.record("abc.gradient_upper", gsq, 2.0 * c.L * delta, slack(2.0 * c.L * delta));
    if (chain) {
      for (std::size_t z = 0; z < chain->size(); ++z) {
        const Vector g = problem.markov_grad(x, z);
        report.record("abc.markov", g.squaredNorm(), rhs, slack(rhs));
        const Vector g2 = problem.markov_grad(x2, z);
        const double lr = c.Lg * (x - x2).norm();
        report.record("abc.lipschitz", (g - g2).norm(), lr, slack(lr));
      }
    } else {
      const Vector g = cursor->markov_grad(x);
      report.record("abc.markov", g.squaredNorm(), rhs, slack(rhs));
      const double lr = c.Lg * (x - x2).norm();
      report.record("abc.lipschitz", (g - cursor->markov_grad(x2)).norm(), lr, slack(lr));
    }
    NoiseSample ns = cursor->sample(x, rng);
    Vector G = ns.markov;
    if (ns.martingale.size() == G.size()) G += ns.martingale;
    report.record("abc.sample", G.squaredNorm(), rhs, slack(rhs));
  }
  return report;
}

}  // namespace plsgd
