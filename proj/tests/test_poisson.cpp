#include <gtest/gtest.h>

#include "plsgd/errors.hpp"
#include "plsgd/poisson.hpp"
#include "test_support.hpp"

using namespace plsgd;

namespace {

Matrix truncated_series(const FiniteChain& c, const Matrix& g, const Vector& mean, int terms) {
  const Matrix centered = g.rowwise() - mean.transpose();
  Matrix out = Matrix::Zero(g.rows(), g.cols());
  Matrix Pk_g = centered;
  for (int k = 0; k < terms; ++k) {
    out += Pk_g;
    Pk_g = c.transition() * Pk_g;
  }
  return out;
}

}  // namespace

TEST(Poisson, SolvesTheEquationAndIsCentered) {
  Rng rng = make_rng(21);
  auto c = std::make_shared<FiniteChain>(testutil::random_kernel(7, rng));
  PoissonSolver solver(c);
  const Matrix g = Matrix::Random(7, 3);
  const PoissonSolution sol = solver.solve_centered(g);
  EXPECT_LT(poisson_residual(sol), 1e-12);
  const Vector pi = solver.pi().as_vector();
  EXPECT_LT((pi.transpose() * sol.values).norm(), 1e-12);
}

TEST(Poisson, MatchesTruncatedSeries) {
  Rng rng = make_rng(22);
  auto c = std::make_shared<FiniteChain>(testutil::random_kernel(5, rng, 0.8));
  PoissonSolver solver(c);
  const Matrix g = Matrix::Random(5, 2);
  const PoissonSolution sol = solver.solve_centered(g);
  EXPECT_LT((sol.values - truncated_series(*c, g, sol.grad_f, 200)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Poisson, RejectsUncenteredInput) {
  Rng rng = make_rng(23);
  auto c = std::make_shared<FiniteChain>(testutil::random_kernel(4, rng));
  PoissonSolver solver(c);
  const Matrix g = Matrix::Random(4, 2);
  EXPECT_THROW(solver.solve(g, Vector::Constant(2, 10.0)), NotCentered);
}

TEST(Poisson, ConstantMapHasZeroSolution) {
  Rng rng = make_rng(24);
  auto c = std::make_shared<FiniteChain>(testutil::random_kernel(4, rng));
  const Matrix g = Matrix::Ones(4, 3);
  const PoissonSolution sol = PoissonSolver(c).solve_centered(g);
  EXPECT_LT(sol.values.norm(), 1e-13);
}

TEST(Poisson, DecompositionReassemblesNoise) {
  Rng rng = make_rng(25);
  auto c = std::make_shared<FiniteChain>(testutil::random_kernel(6, rng));
  const Matrix g = Matrix::Random(6, 4);
  const PoissonSolution sol = PoissonSolver(c).solve_centered(g);
  for (std::size_t z = 0; z < 6; ++z) {
    for (std::size_t z1 = 0; z1 < 6; ++z1) {
      const NoiseDecomposition dec = decompose_step(sol, z, z1);
      const Vector noise = sol.markov_grad.row(static_cast<Eigen::Index>(z)).transpose() - sol.grad_f;
      EXPECT_LT((noise - (dec.markov_mart - dec.correction)).norm(), 1e-12);
    }
  }
}

TEST(Poisson, MartingalePartHasZeroConditionalMean) {
  Rng rng = make_rng(26);
  auto c = std::make_shared<FiniteChain>(testutil::random_kernel(5, rng));
  const PoissonSolution sol = PoissonSolver(c).solve_centered(Matrix::Random(5, 2));
  for (std::size_t z = 0; z < 5; ++z) {
    Vector mean = Vector::Zero(2);
    for (std::size_t z1 = 0; z1 < 5; ++z1) mean += (*c)(z, z1) * decompose_step(sol, z, z1).markov_mart;
    EXPECT_LT(mean.norm(), 1e-12);
  }
}

TEST(Poisson, BoundsHoldForLinearMaps) {
  Rng rng = make_rng(27);
  // Dense rows keep the one-step distance to pi below 1, so t_mix exists.
  auto c = std::make_shared<FiniteChain>(testutil::random_kernel(6, rng, 0.9));
  const int t = mixing_time(*c);
  // g(x, z) = x + b_z, so Lg = 1 and ||g||^2 <= 2||x||^2 + 2 max||b||^2.
  const Matrix b = Matrix::Random(6, 3);
  const GradMap g = [&](const Vector& x, std::size_t z) -> Vector {
    return x + b.row(static_cast<Eigen::Index>(z)).transpose();
  };
  PoissonSolver solver(c);
  for (int rep = 0; rep < 20; ++rep) {
    const Vector x = Vector::Random(3);
    const Vector x2 = Vector::Random(3);
    const PoissonSolution sol = solver.solve_centered(evaluate_on_states(g, x, 6), x);
    // f(x) = ||x + b_bar||^2 / 2 with f* = 0, and
    // ||g||^2 <= 2||grad f||^2 + 2||b_z - b_bar||^2, i.e. A = 2, B = 0.
    const double C = 2.0 * (b.rowwise() - sol.grad_f.transpose() + x.transpose()).rowwise().squaredNorm().maxCoeff();
    const double delta_x = 0.5 * sol.grad_f.squaredNorm();
    EXPECT_TRUE(verify_v_bounds(sol, t, AbcConstants{2.0, 0.0, C, 1.0}, delta_x).passed());
    EXPECT_TRUE(verify_v_lipschitz(solver, g, x, x2, t, 1.0).passed());
  }
}
