#pragma once

#include <memory>
#include <vector>

#include "plsgd/problem.hpp"

namespace plsgd {

/// Markov-modulated quadratic: g(x, z) = H_z x - h_z on an explicit finite
/// chain, f(x) = sum_z pi_z (x^T H_z x / 2 - h_z^T x + c_z), optionally with
/// martingale noise uniform on a ball of radius `martingale_radius`.
///
/// Constants: mu and L from the extreme eigenvalues of the averaged Hessian,
/// Lg = max_z ||H_z||, and ABC from g = H_z (x - x*) + (H_z x* - h_z):
///   ||g||^2 <= (4 Lg^2 / mu) Delta + 2 max_z ||H_z x* - h_z||^2,
/// doubled when martingale noise is present. When g == grad f and there is
/// no martingale noise, (A, B, C) = (1, 0, 0). With allow_singular the
/// averaged Hessian may be rank-deficient; mu is then its smallest positive
/// eigenvalue and the ABC constants must be supplied by a subclass.
class FiniteQuadratic : public Problem {
 public:
  FiniteQuadratic(std::shared_ptr<const FiniteChain> chain, std::vector<Matrix> H, std::vector<Vector> h,
                  std::vector<double> offsets = {}, double martingale_radius = 0.0, bool allow_singular = false);

  std::string kind() const override { return "quadratic"; }
  Eigen::Index dim() const override { return hbar_.size(); }
  double objective(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  double f_star() const override { return f_star_; }
  double suboptimality(const Vector& x) const override;
  const ProblemConstants& constants() const override { return constants_; }
  MixingInfo mixing() const override { return mixing_; }
  std::unique_ptr<ChainCursor> start(Rng& rng) const override;
  std::shared_ptr<const FiniteChain> finite_chain() const override { return chain_; }
  Vector markov_grad(const Vector& x, std::size_t z) const override;
  bool has_martingale() const override { return martingale_radius_ > 0.0; }
  nlohmann::json describe() const override;

  const Distribution& pi() const { return pi_; }
  const Matrix& hessian() const { return Hbar_; }
  Vector minimizer() const override { return x_star_; }
  double martingale_radius() const { return martingale_radius_; }

  /// Z_0 ~ pi by default; a fixed state when set.
  void set_start_state(std::optional<std::size_t> z0);

 protected:
  /// Smallest positive eigenvalue of the averaged Hessian (PL constant of
  /// a possibly rank-deficient quadratic).
  double min_positive_eigenvalue() const;
  void set_constants(const ProblemConstants& c) { constants_ = c; }

  std::shared_ptr<const FiniteChain> chain_;
  Distribution pi_;
  std::vector<Matrix> H_;
  std::vector<Vector> h_;
  std::vector<double> offsets_;
  double martingale_radius_ = 0.0;
  Matrix Hbar_;
  Vector hbar_;
  double cbar_ = 0.0;
  Vector x_star_;
  double f_star_ = 0.0;
  ProblemConstants constants_;
  MixingInfo mixing_;
  std::optional<std::size_t> z0_;
};

/// Mixing information for an explicit chain: a certificate when one exists,
/// otherwise the smallest t with max_z ||P^k(z,.) - pi||_TV <= 2^{-floor(k/t)}
/// for t <= k <= horizon, flagged as an estimate.
MixingInfo mixing_info(const FiniteChain& chain);

}  // namespace plsgd
