#include <sstream>

#include <gtest/gtest.h>

#include "plsgd/chain.hpp"
#include "plsgd/errors.hpp"
#include "test_support.hpp"

using namespace plsgd;

namespace {

std::shared_ptr<FiniteChain> two_state(double p, double q) {
  Matrix P(2, 2);
  P << 1 - p, p, q, 1 - q;
  return std::make_shared<FiniteChain>(P);
}

}  // namespace

TEST(Distribution, RejectsBadWeights) {
  EXPECT_THROW(Distribution({0.5, 0.6}), InvalidArgument);
  EXPECT_THROW(Distribution({1.5, -0.5}), InvalidArgument);
  EXPECT_NO_THROW(Distribution({0.25, 0.75}));
}

TEST(FiniteChain, RejectsNonStochasticRows) {
  Matrix P(2, 2);
  P << 0.5, 0.4, 0.2, 0.8;
  EXPECT_THROW(FiniteChain{P}, InvalidArgument);
  EXPECT_THROW(FiniteChain{Matrix::Identity(2, 3)}, InvalidArgument);
}

TEST(FiniteChain, ParseRoundTrip) {
  std::istringstream in("2\n0.9 0.1\n0.2 0.8\n");
  const FiniteChain c = FiniteChain::parse(in);
  std::ostringstream out;
  c.write(out);
  std::istringstream again(out.str());
  EXPECT_EQ(FiniteChain::parse(again).transition(), c.transition());
}

TEST(Stationary, TwoStateClosedForm) {
  const Distribution pi = stationary(*two_state(0.1, 0.2));
  EXPECT_NEAR(pi[0], 2.0 / 3.0, 1e-14);
  EXPECT_NEAR(pi[1], 1.0 / 3.0, 1e-14);
}

TEST(Stationary, IdentityHasNoUniqueLaw) {
  EXPECT_THROW(stationary(FiniteChain(Matrix::Identity(3, 3))), NonUniqueStationary);
}

TEST(Stationary, RandomKernelsSolveBalance) {
  Rng rng = make_rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    const FiniteChain c(testutil::random_kernel(3 + rep, rng));
    const Vector pi = stationary(c).as_vector();
    EXPECT_LT((c.transition().transpose() * pi - pi).lpNorm<Eigen::Infinity>(), 1e-13);
  }
}

TEST(TotalVariation, UnnormalizedSum) {
  EXPECT_NEAR(tv_distance(Distribution({0.5, 0.5}), Distribution({0.7, 0.3})), 0.4, 1e-15);
  EXPECT_DOUBLE_EQ(tv_distance(Distribution::point_mass(3, 0), Distribution::point_mass(3, 2)), 2.0);
}

TEST(Mixing, IidChainMixesInOneStep) {
  Matrix P(2, 2);
  P << 0.5, 0.5, 0.5, 0.5;
  EXPECT_EQ(mixing_time(FiniteChain(P)), 1);
}

TEST(Mixing, TwoCycleHasNoMixingTime) {
  Matrix P(2, 2);
  P << 0, 1, 1, 0;
  EXPECT_THROW(mixing_time(FiniteChain(P)), MixingTimeNotFound);
}

TEST(Mixing, CertificateHoldsOnItsHorizon) {
  const auto c = two_state(0.1, 0.2);
  const MixingCertificate cert = certify_mixing(*c);
  ASSERT_GE(cert.tmix, 1);
  for (int k = 1; k <= cert.horizon; ++k) {
    EXPECT_LE(cert.worst_tv[static_cast<std::size_t>(k)], std::ldexp(1.0, -(k / cert.tmix)) + 1e-15);
  }
  EXPECT_LE(cert.dobrushin_at_tmix, 0.5);
}

TEST(Mixing, SlowerChainNeedsLongerWindow) {
  EXPECT_LT(mixing_time(*two_state(0.3, 0.3)), mixing_time(*two_state(0.02, 0.02)));
}

TEST(SamplePath, DeterministicAndEmpirical) {
  const auto c = two_state(0.1, 0.2);
  const auto p1 = sample_path(*c, Distribution::point_mass(2, 0), 200000, 3);
  EXPECT_EQ(p1, sample_path(*c, Distribution::point_mass(2, 0), 200000, 3));
  double ones = 0;
  for (std::size_t z : p1) ones += static_cast<double>(z);
  EXPECT_NEAR(ones / static_cast<double>(p1.size()), 1.0 / 3.0, 0.01);
}

TEST(FundamentalMatrix, InvertsTheShiftedSystem) {
  Rng rng = make_rng(9);
  const FiniteChain c(testutil::random_kernel(6, rng));
  const Matrix F = fundamental_matrix(c);
  const Vector pi = stationary(c).as_vector();
  const Matrix M = Matrix::Identity(6, 6) - c.transition() + Vector::Ones(6) * pi.transpose();
  EXPECT_LT((F * M - Matrix::Identity(6, 6)).norm(), 1e-12);
}
