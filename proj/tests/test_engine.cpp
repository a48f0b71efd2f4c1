#include <sstream>

#include <gtest/gtest.h>

#include "plsgd/engine.hpp"
#include "plsgd/errors.hpp"
#include "plsgd/quadratic.hpp"
#include "plsgd/token.hpp"
#include "test_support.hpp"

using namespace plsgd;

namespace {

// f(x) = x^2 / 2 on a one-state chain: g == grad f, no noise.
std::shared_ptr<FiniteQuadratic> scalar_quadratic(double x0) {
  auto chain = std::make_shared<FiniteChain>(Matrix::Ones(1, 1));
  auto p = std::make_shared<FiniteQuadratic>(chain, std::vector<Matrix>{Matrix::Ones(1, 1)},
                                             std::vector<Vector>{Vector::Zero(1)});
  p->set_initial_point(Vector::Constant(1, x0));
  return p;
}

}  // namespace

TEST(Schedule, Stepsizes) {
  const StepSchedule s(2.0, 8.0);
  EXPECT_DOUBLE_EQ(stepsize(s, 0), 0.25);
  EXPECT_DOUBLE_EQ(stepsize(s, 2), 0.2);
  EXPECT_THROW(StepSchedule(0.0, 1.0), InvalidArgument);
  EXPECT_THROW(StepSchedule(1.0, -1.0), InvalidArgument);
}

TEST(Schedule, StrictlyDecreasing) {
  Rng rng = make_rng(1);
  const StepSchedule s(0.1 + 10 * uniform01(rng), 0.1 + 100 * uniform01(rng));
  for (std::size_t k = 0; k < 10000; ++k) ASSERT_GT(stepsize(s, k), stepsize(s, k + 1));
}

TEST(Zeta, ProductsAndConventions) {
  const StepSchedule s(2.0, 4.0);
  EXPECT_NEAR(zeta(s, 1.0, 0, 1), 0.3, 1e-15);
  EXPECT_EQ(zeta(s, 1.0, 5, 4), 1.0);
  // mu alpha_0 = 1 makes the first factor vanish.
  EXPECT_EQ(zeta(StepSchedule(2.0, 2.0), 1.0, 0, 3), 0.0);
}

TEST(Zeta, LemmaBoundsHold) {
  const Report r = verify_zeta_bounds(StepSchedule(2.0, 4.0), 1.0, 2000, 3);
  EXPECT_TRUE(r.passed());
  EXPECT_NE(r.find("zeta.product"), nullptr);
  EXPECT_NE(r.find("zeta.sum_alpha"), nullptr);
  EXPECT_NE(r.find("zeta.sum_alpha_sq"), nullptr);
}

TEST(Zeta, RejectsOutsideHypotheses) {
  EXPECT_THROW(verify_zeta_bounds(StepSchedule(2.0, 1.0), 1.0, 10), HypothesisViolated);
  EXPECT_THROW(verify_zeta_bounds(StepSchedule(0.5, 4.0), 1.0, 10), HypothesisViolated);
}

TEST(Run, ExactOneStepMinimization) {
  const auto p = scalar_quadratic(3.0);
  const Trajectory t = run(*p, StepSchedule(2.0, 2.0), 1, 7, RunOptions{false, true, false});
  ASSERT_EQ(t.iterates.size(), 2u);
  EXPECT_EQ(t.iterates[1](0), 0.0);
  EXPECT_EQ(t.suboptimality[1], 0.0);
}

TEST(Run, NoiselessMatchesGradientDescent) {
  const auto p = scalar_quadratic(1.5);
  const StepSchedule s(3.0, 10.0);
  const Trajectory t = run(*p, s, 50, 1, RunOptions{false, true, false});
  double x = 1.5;
  for (std::size_t k = 0; k < 50; ++k) {
    x -= stepsize(s, k) * x;
    EXPECT_DOUBLE_EQ(t.iterates[k + 1](0), x);
  }
}

TEST(Run, RejectsSmallStepNumerator) {
  const auto p = scalar_quadratic(1.0);
  EXPECT_THROW(run(*p, StepSchedule(1.0, 10.0), 5, 1), HypothesisViolated);
}

TEST(Run, DivergenceRaisesNonFinite) {
  // f(x0) = 1e200 * 1e200 / 2 is already out of range.
  auto chain = std::make_shared<FiniteChain>(Matrix::Ones(1, 1));
  FiniteQuadratic p(chain, {Matrix::Constant(1, 1, 1e200)}, {Vector::Zero(1)});
  p.set_initial_point(Vector::Constant(1, 1e100));
  try {
    run(p, StepSchedule(1.0, 1e-100), 10, 1);
    FAIL() << "expected NonFinite";
  } catch (const NonFinite& e) {
    EXPECT_LE(e.step(), 10u);
  }
}

TEST(Run, DeterministicPerSeedAndStream) {
  const TokenBuild b = make_token_problem(TokenSpec{});
  const StepSchedule s(2.0 / b.problem->constants().mu, 20.0);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    EXPECT_EQ(run(*b.problem, s, 500, seed).suboptimality, run(*b.problem, s, 500, seed).suboptimality);
  }
  EXPECT_NE(run(*b.problem, s, 500, 1, {}, 0).suboptimality, run(*b.problem, s, 500, 1, {}, 1).suboptimality);
}

TEST(Run, RecordedNoiseReassembles) {
  const TokenBuild b = make_token_problem(TokenSpec{});
  const StepSchedule s(2.0 / b.problem->constants().mu, 20.0);
  const Trajectory t = run(*b.problem, s, 300, 4, RunOptions{true, false, true});
  ASSERT_EQ(t.noise.size(), 300u);
  const Report r = audit_trajectory(*b.problem, t);
  EXPECT_TRUE(r.passed());
  EXPECT_EQ(r.find("engine.noise_reassembly")->samples, 300u);
}

TEST(TrajectoryCsv, HeaderAndRows) {
  const auto p = scalar_quadratic(1.0);
  std::vector<Trajectory> ts{run(*p, StepSchedule(2.0, 4.0), 3, 1, RunOptions{false, false, true})};
  std::ostringstream out;
  write_trajectory_csv(out, ts);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "trial,k,delta,grad_norm_sq");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 4);
}
