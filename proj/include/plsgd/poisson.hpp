#pragma once

#include <cstddef>
#include <functional>
#include <memory>

#include "plsgd/chain.hpp"
#include "plsgd/report.hpp"

namespace plsgd {

/// g(x, z) for a finite chain state z.
using GradMap = std::function<Vector(const Vector& x, std::size_t z)>;

/// n x d matrix whose row z is g(x, z).
Matrix evaluate_on_states(const GradMap& g, const Vector& x, std::size_t n_states);

/// V(x, .) at one anchor point x. Row z of `values` is V(x, z).
struct PoissonSolution {
  Matrix values;
  Matrix markov_grad;  // row z is g(x, z)
  Vector grad_f;
  Vector anchor;
  std::shared_ptr<const FiniteChain> chain;

  Vector at(std::size_t z) const { return values.row(static_cast<Eigen::Index>(z)).transpose(); }
  /// Sum_z' P(z, z') V(x, z').
  Vector expected_next(std::size_t z) const;
};

/// Markov-noise pieces of one step. raw_mart is the external martingale
/// noise M_{k+1} and is left zero by decompose_step.
struct NoiseDecomposition {
  Vector markov_mart;  // M~_{k+1}
  Vector correction;   // d_k
  Vector raw_mart;     // M_{k+1}
};

/// Solves V - PV = g - 1 grad_f^T with pi^T V = 0. The LU factorization of
/// I - P + 1 pi^T is computed once and reused for every anchor point.
class PoissonSolver {
 public:
  explicit PoissonSolver(std::shared_ptr<const FiniteChain> chain);

  /// Throws NotCentered unless grad_f = pi^T g_at_x within 1e-8.
  PoissonSolution solve(const Matrix& g_at_x, const Vector& grad_f, const Vector& anchor = Vector()) const;
  /// Uses grad_f = pi^T g_at_x.
  PoissonSolution solve_centered(const Matrix& g_at_x, const Vector& anchor = Vector()) const;

  const FiniteChain& chain() const { return *chain_; }
  const std::shared_ptr<const FiniteChain>& chain_ptr() const { return chain_; }
  const Distribution& pi() const { return pi_; }

 private:
  std::shared_ptr<const FiniteChain> chain_;
  Distribution pi_;
  Eigen::PartialPivLU<Matrix> lu_;
};

PoissonSolution solve_poisson(std::shared_ptr<const FiniteChain> chain, const Matrix& g_at_x, const Vector& grad_f);

/// M~ = V(x_k, z_{k+1}) - (row z_k of P) V and d = V(x_k, z_{k+1}) - V(x_k, z_k).
NoiseDecomposition decompose_step(const PoissonSolution& sol, std::size_t z_k, std::size_t z_k1);

/// Largest row residual of (I - P)V - (g - 1 grad_f^T), in the Euclidean norm.
double poisson_residual(const PoissonSolution& sol);

struct AbcConstants {
  double A = 0.0;
  double B = 0.0;
  double C = 0.0;
  double L = 0.0;
};

/// Checks, at the anchor of `sol` with suboptimality delta_x:
///   norm:        ||V(x,z)||    <= 2 t sqrt(d) max_z' ||g(x,z')||
///   squared:     ||V(x,z)||^2  <= 4 t^2 d ((2AL+B) delta_x + C)
///   martingale:  ||M~||^2      <= 16 t^2 d ((2AL+B) delta_x + C), every z_k and reachable z_{k+1}
Report verify_v_bounds(const PoissonSolution& sol, int tmix, const AbcConstants& constants, double delta_x);

/// max_z ||V(x1,z) - V(x2,z)|| <= 2 t Lg sqrt(d) ||x1 - x2||.
Report verify_v_lipschitz(const PoissonSolver& solver, const GradMap& g, const Vector& x1, const Vector& x2, int tmix,
                          double Lg);

}  // namespace plsgd
