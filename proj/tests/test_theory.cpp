#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "plsgd/errors.hpp"
#include "plsgd/theory.hpp"
#include "plsgd/token.hpp"
#include "test_support.hpp"
#include "theory_fixtures.hpp"

using namespace plsgd;
using testutil::rel_err;
using namespace plsgd::fixtures;

namespace {

constexpr double kTol = 1e-12;

// K >= C log(2K/delta) (1 + log(2K/delta)/log(2/delta)).
bool solver_predicate(double K, double C, double delta) {
  const double l = std::log(2.0 * K / delta);
  return K >= C * l * (1.0 + l / std::log(2.0 / delta));
}

}  // namespace

TEST(WorkedInstance, DConstants) {
  const DConstants d = d_constants(worked());
  EXPECT_LT(rel_err(d.m1, kM1), kTol);
  EXPECT_LT(rel_err(d.m2, kM2), kTol);
  EXPECT_LT(rel_err(d.m3, kM3), kTol);
  EXPECT_LT(rel_err(d.m4, kM4), kTol);
  EXPECT_LT(rel_err(d.D1, kD1), kTol);
  EXPECT_LT(rel_err(d.D2, kD2), kTol);
}

TEST(WorkedInstance, GammaConstants) {
  const TheoryInputs in = worked();
  const GammaConstants g = gamma_constants(in, d_constants(in));
  EXPECT_LT(rel_err(g.nu1, kNu1), kTol);
  EXPECT_LT(rel_err(g.nu2, kNu2), kTol);
  EXPECT_LT(rel_err(g.Gamma1, kGamma1), kTol);
  EXPECT_LT(rel_err(g.Gamma2, kGamma2At1000), kTol);
  EXPECT_LT(rel_err(g.Kbar0, 1000.0 / std::log(4.0)), kTol);
}

TEST(WorkedInstance, K0Requirements) {
  EXPECT_LT(rel_err(k0_lower_bound(worked()), kK0High), kTol);
  EXPECT_LT(rel_err(expected_k0_lower_bound(worked()), kK0Expected), kTol);
  const K0Terms t = k0_terms(worked());
  EXPECT_DOUBLE_EQ(t.smoothness, 4.5);
  EXPECT_DOUBLE_EQ(t.mu_a, 3.0);
  EXPECT_LT(rel_err(t.twice_D2, 2 * kD2), kTol);
  for (double term : {t.smoothness, t.mu_a, t.twice_D2, t.concentration}) EXPECT_LE(term, t.max());
}

TEST(WorkedInstance, BoundCurves) {
  const TheoryConstants hp = compute_theory(worked(kK0High));
  EXPECT_LT(rel_err(hp_envelope(hp, 100), kEnvelopeAt100), kTol);
  const TheoryConstants ex = compute_theory(worked(kK0Expected));
  EXPECT_LT(rel_err(expected_bound(ex, 1000), kExpectedAt1000), kTol);
}

TEST(WorkedInstance, MartingaleOnly) {
  const MartingaleConstants m = martingale_only_constants(worked());
  EXPECT_LT(rel_err(m.nu1, kMartNu1), kTol);
  EXPECT_LT(rel_err(m.nu2, kMartNu2), kTol);
  EXPECT_LT(rel_err(m.Gamma1, kMartGamma1), kTol);
  EXPECT_LT(rel_err(m.Gamma2, kMartGamma2At1000), kTol);
  EXPECT_LT(rel_err(m.K0_required, kMartK0), kTol);
}

TEST(Constants, NoiselessCollapses) {
  TheoryInputs in = worked();
  in.A = in.B = in.C = 0;
  const DConstants d = d_constants(in);
  EXPECT_EQ(d.D1, 0.0);
  EXPECT_EQ(d.D2, 0.0);
  EXPECT_DOUBLE_EQ(k0_lower_bound(in), in.mu * in.a);
  const TheoryConstants tc = compute_theory(in);
  EXPECT_NEAR(expected_bound(tc, 7), in.Delta0 * in.K0 / (7 + in.K0), 1e-15);
}

TEST(Constants, CZeroDropsSecondTerm) {
  TheoryInputs in = worked();
  in.C = 0;
  const DConstants d = d_constants(in);
  EXPECT_EQ(d.m2, 0.0);
  EXPECT_EQ(d.m4, 0.0);
  const double first = 2 * in.a * d.m1 * in.tmix * in.L * std::sqrt(in.d) * in.Delta0;
  EXPECT_NEAR(d.D1, first, 1e-12 * first);
}

TEST(Constants, AdditiveZerosInGamma) {
  TheoryInputs in = worked();
  in.C = 0;
  in.Delta0 = 0;
  in.A = 0;
  in.B = 0;
  const GammaConstants g = gamma_constants(in, d_constants(in));
  EXPECT_EQ(g.Gamma1, 0.0);
  EXPECT_NEAR(g.Gamma2, 4 * g.nu1 * (1 + 3 * g.logKbar0), 1e-15);
}

TEST(Constants, NuAffineInMixingFactor) {
  TheoryInputs in = worked();
  const GammaConstants g1 = gamma_constants(in, d_constants(in));
  in.tmix = 4;
  const GammaConstants g2 = gamma_constants(in, d_constants(in));
  EXPECT_NEAR(g2.nu2 / g1.nu2, (16.0 * 2 + 1) / (4.0 * 2 + 1), 1e-12);
}

TEST(Constants, HypothesesEnforced) {
  TheoryInputs in = worked();
  in.a = 1.2;  // 2 mu a = 2.4 <= 3
  EXPECT_THROW(compute_theory(in), HypothesisViolated);
  EXPECT_THROW(martingale_only_constants(in), HypothesisViolated);
  in.a = 0.9;  // mu a < 1
  EXPECT_THROW(d_constants(in), HypothesisViolated);
}

TEST(Constants, DeltaHalvedRaisesConcentrationTerm) {
  TheoryInputs in = worked();
  const double before = k0_terms(in).concentration;
  in.delta = 0.25;
  EXPECT_GT(k0_terms(in).concentration, before);
}

TEST(Constants, MartingaleZeroCases) {
  TheoryInputs in = worked();
  in.C = 0;
  in.Delta0 = 0;
  const MartingaleConstants m = martingale_only_constants(in);
  EXPECT_EQ(m.nu1, 0.0);
  EXPECT_EQ(m.Gamma1, 0.0);
  EXPECT_EQ(m.Gamma2, 0.0);
}

TEST(K0Solver, SatisfiesInequality) {
  for (double C : {1.0, 4.0, 100.0, 1e6}) {
    for (double delta : {0.5, 0.1, 1e-3}) EXPECT_TRUE(solver_predicate(k0_solver(C, delta), C, delta));
  }
  EXPECT_THROW(k0_solver(0.5, 0.1), InvalidArgument);
}

TEST(Envelope, RefusesInfeasibleK0) {
  const TheoryConstants tc = compute_theory(worked(100.0));
  EXPECT_THROW(hp_envelope(tc, 5), InfeasibleK0);
  EXPECT_THROW(expected_bound(tc, 5), InfeasibleK0);
}

TEST(Envelope, ShapeAndMonotonicity) {
  const TheoryConstants tc = compute_theory(worked(kK0High));
  const double K0 = tc.inputs.K0;
  double prev_num = 0;
  double prev_exp = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < 5000; k += 7) {
    const double num = hp_envelope(tc, k) * (static_cast<double>(k) + K0);
    EXPECT_NEAR(num, lambda_numerator(tc, k), 1e-9 * num);
    EXPECT_GE(num, prev_num);
    prev_num = num;
    const double eb = expected_bound(tc, k);
    EXPECT_LT(eb, prev_exp);
    prev_exp = eb;
    // Lambda/(k + K0) stays below its k -> 0 extrapolation (c1 + Gamma2 log(2K0/delta))/K0.
    const double c1 = K0 * tc.inputs.Delta0 + tc.gamma.Gamma1 + tc.gamma.Gamma2 * std::log(2 * K0 / tc.inputs.delta);
    EXPECT_TRUE(testutil::log_ratio_dominated(c1, tc.gamma.Gamma2, K0, static_cast<double>(k),
                                                    tc.inputs.delta / 2.0));
  }
  EXPECT_GE(expected_bound(tc, 0), tc.inputs.Delta0);
  EXPECT_DOUBLE_EQ(good_event_bound(tc, 0), tc.inputs.Delta0);
}

TEST(AbcVerify, TokenInstancePasses) {
  const TokenBuild b = make_token_problem(TokenSpec{});
  Rng rng = make_rng(5);
  AbcVerifyOptions opts;
  opts.samples = 10000;
  const Report r = abc_verify(*b.problem, opts, rng);
  EXPECT_TRUE(r.passed());
  EXPECT_GE(r.find("abc.markov")->samples, 10000u);
}
