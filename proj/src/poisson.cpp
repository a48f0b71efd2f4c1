#include "plsgd/poisson.hpp"

#include <algorithm>
#include <cmath>

#include "plsgd/errors.hpp"

namespace plsgd {

namespace {

constexpr double kCenterTol = 1e-8;
// Relative slack granted to the bound checks for floating-point round-off.
constexpr double kRoundoff = 1e-9;

}  // namespace

Matrix evaluate_on_states(const GradMap& g, const Vector& x, std::size_t n_states) {
  Matrix out;
  for (std::size_t z = 0; z < n_states; ++z) {
    Vector gz = g(x, z);
    if (z == 0) out.resize(static_cast<Eigen::Index>(n_states), gz.size());
    if (gz.size() != out.cols()) throw DimensionMismatch("g(x, z) changes dimension across states");
    out.row(static_cast<Eigen::Index>(z)) = gz.transpose();
  }
  return out;
}

Vector PoissonSolution::expected_next(std::size_t z) const {
  return (chain->transition().row(static_cast<Eigen::Index>(z)) * values).transpose();
}

PoissonSolver::PoissonSolver(std::shared_ptr<const FiniteChain> chain)
    : chain_(std::move(chain)), pi_(stationary(*chain_)) {
  const Eigen::Index n = static_cast<Eigen::Index>(chain_->size());
  Matrix M = Matrix::Identity(n, n) - chain_->transition() + Vector::Ones(n) * pi_.as_vector().transpose();
  Eigen::FullPivLU<Matrix> check(M);
  if (!check.isInvertible()) throw SingularSystem("I - P + 1 pi^T is singular");
  lu_.compute(M);
}

PoissonSolution PoissonSolver::solve(const Matrix& g_at_x, const Vector& grad_f, const Vector& anchor) const {
  const Eigen::Index n = static_cast<Eigen::Index>(chain_->size());
  if (g_at_x.rows() != n) throw DimensionMismatch("g_at_x must have one row per chain state");
  if (grad_f.size() != g_at_x.cols()) throw DimensionMismatch("grad_f length differs from g dimension");

  const Vector mean = (pi_.as_vector().transpose() * g_at_x).transpose();
  const double gap = (mean - grad_f).cwiseAbs().maxCoeff();
  if (gap > kCenterTol * std::max(1.0, grad_f.cwiseAbs().maxCoeff())) {
    throw NotCentered("grad_f differs from the stationary mean of g by " + std::to_string(gap));
  }

  PoissonSolution sol;
  const Matrix centered = g_at_x.rowwise() - grad_f.transpose();
  sol.values = lu_.solve(centered);
  // One step of iterative refinement keeps the residual near machine precision
  // for poorly mixing chains.
  const Matrix& P = chain_->transition();
  const Vector pi = pi_.as_vector();
  Matrix M_times_V = sol.values - P * sol.values + Vector::Ones(n) * (pi.transpose() * sol.values);
  sol.values += lu_.solve(centered - M_times_V);
  sol.markov_grad = g_at_x;
  sol.grad_f = grad_f;
  sol.anchor = anchor;
  sol.chain = chain_;
  return sol;
}

PoissonSolution PoissonSolver::solve_centered(const Matrix& g_at_x, const Vector& anchor) const {
  if (g_at_x.rows() != static_cast<Eigen::Index>(chain_->size())) {
    throw DimensionMismatch("g_at_x must have one row per chain state");
  }
  const Vector mean = (pi_.as_vector().transpose() * g_at_x).transpose();
  return solve(g_at_x, mean, anchor);
}

PoissonSolution solve_poisson(std::shared_ptr<const FiniteChain> chain, const Matrix& g_at_x, const Vector& grad_f) {
  return PoissonSolver(std::move(chain)).solve(g_at_x, grad_f);
}

NoiseDecomposition decompose_step(const PoissonSolution& sol, std::size_t z_k, std::size_t z_k1) {
  const std::size_t n = sol.chain->size();
  if (z_k >= n || z_k1 >= n) throw InvalidArgument("decompose_step: state out of range");
  NoiseDecomposition out;
  const Vector v_next = sol.at(z_k1);
  out.markov_mart = v_next - sol.expected_next(z_k);
  out.correction = v_next - sol.at(z_k);
  out.raw_mart = Vector::Zero(v_next.size());
  return out;
}

double poisson_residual(const PoissonSolution& sol) {
  const Matrix& P = sol.chain->transition();
  const Matrix lhs = sol.values - P * sol.values;
  const Matrix rhs = sol.markov_grad.rowwise() - sol.grad_f.transpose();
  return (lhs - rhs).rowwise().norm().maxCoeff();
}

Report verify_v_bounds(const PoissonSolution& sol, int tmix, const AbcConstants& c, double delta_x) {
  Report report;
  const double t = static_cast<double>(tmix);
  const double d = static_cast<double>(sol.values.cols());
  const double u = 2.0 * c.A * c.L + c.B;
  const double energy = u * std::max(delta_x, 0.0) + c.C;
  const double g_sup = sol.markov_grad.rowwise().norm().maxCoeff();

  const double norm_rhs = 2.0 * t * std::sqrt(d) * g_sup;
  const double sq_rhs = 4.0 * t * t * d * energy;
  const double mart_rhs = 16.0 * t * t * d * energy;

  const std::size_t n = sol.chain->size();
  const Matrix& P = sol.chain->transition();
  for (std::size_t z = 0; z < n; ++z) {
    const double vz = sol.at(z).norm();
    report.record("poisson.norm_bound", vz, norm_rhs, kRoundoff * (1.0 + norm_rhs));
    report.record("poisson.squared_bound", vz * vz, sq_rhs, kRoundoff * (1.0 + sq_rhs));
    const Vector mean_next = sol.expected_next(z);
    for (std::size_t z1 = 0; z1 < n; ++z1) {
      if (P(static_cast<Eigen::Index>(z), static_cast<Eigen::Index>(z1)) <= 0.0) continue;
      const double m = (sol.at(z1) - mean_next).squaredNorm();
      report.record("poisson.martingale_bound", m, mart_rhs, kRoundoff * (1.0 + mart_rhs));
    }
  }
  return report;
}

Report verify_v_lipschitz(const PoissonSolver& solver, const GradMap& g, const Vector& x1, const Vector& x2, int tmix,
                          double Lg) {
  if (x1.size() != x2.size()) throw DimensionMismatch("verify_v_lipschitz: x1 and x2 differ in length");
  const std::size_t n = solver.chain().size();
  const PoissonSolution s1 = solver.solve_centered(evaluate_on_states(g, x1, n), x1);
  const PoissonSolution s2 = solver.solve_centered(evaluate_on_states(g, x2, n), x2);
  const double d = static_cast<double>(x1.size());
  const double rhs = 2.0 * static_cast<double>(tmix) * Lg * std::sqrt(d) * (x1 - x2).norm();
  const double lhs = (s1.values - s2.values).rowwise().norm().maxCoeff();
  Report report;
  report.record("poisson.lipschitz", lhs, rhs, kRoundoff * (1.0 + rhs) + 1e-12);
  return report;
}

}  // namespace plsgd
