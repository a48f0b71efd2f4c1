#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "plsgd/problem.hpp"

namespace plsgd {

/// Linear dynamical system Z_{k+1} = A* Z_k + w_k with ||w_k|| <= B.
struct SysIdState {
  Matrix A_star;
  double noise_bound = 0.0;
  Vector z;
  /// ||A*||_2; equals the spectral radius for symmetric A*.
  double lambda_max = 0.0;
};

/// Z <- A* Z + w with w uniform on the radius-B ball.
void sysid_advance(SysIdState& state, Rng& rng);

/// A_k - alpha (A_k z_k - z_k1) z_k^T.
Matrix sysid_grad_update(const Matrix& A_k, const Vector& z_k, const Vector& z_k1, double alpha);

/// Solves Sigma = A Sigma A^T + Q by vectorization.
Matrix lyapunov_solve(const Matrix& A, const Matrix& Q);

/// Cov(w) = B^2/(d+2) I for w uniform on the radius-B ball in R^d.
Matrix ball_covariance(Eigen::Index d, double radius);

/// Long-run average of Z Z^T over `steps` steps after `burn_in`, from Z = 0.
Matrix estimate_stationary_covariance(const SysIdState& state, std::size_t steps, std::size_t burn_in,
                                      std::uint64_t seed);

/// Online least squares for A*: parameter x = vec(A) (column-major),
///   L(A) = E||(A - A*) Z||^2 / 2 = tr((A - A*) Sigma (A - A*)^T) / 2,
///   g(A, Z) = (A - A*) Z Z^T,  M_{k+1} = -w_k Z_k^T.
class SystemIdentification : public Problem {
 public:
  SystemIdentification(Matrix A_star, double noise_bound, Vector z0 = Vector(), double tmix_factor = 2.0);

  std::string kind() const override { return "sysid"; }
  Eigen::Index dim() const override { return A_star_.size(); }
  double objective(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  double f_star() const override { return 0.0; }
  Vector minimizer() const override { return vec(A_star_); }
  const ProblemConstants& constants() const override { return constants_; }
  MixingInfo mixing() const override { return mixing_; }
  std::unique_ptr<ChainCursor> start(Rng& rng) const override;
  bool has_martingale() const override { return noise_bound_ > 0.0; }
  nlohmann::json describe() const override;

  const Matrix& A_star() const { return A_star_; }
  const Matrix& covariance() const { return sigma_; }
  double noise_bound() const { return noise_bound_; }
  double lambda_max() const { return lambda_; }
  const Vector& z0() const { return z0_; }
  /// max(||Z_0||, B/(1 - lambda_max)).
  double state_radius() const;
  double mu_min() const { return mu_min_; }
  double mu_max() const { return mu_max_; }
  SysIdState initial_state() const;

  static Matrix unvec(const Vector& x, Eigen::Index d);
  static Vector vec(const Matrix& A);

 private:
  Matrix A_star_;
  double noise_bound_;
  Vector z0_;
  double lambda_ = 0.0;
  Matrix sigma_;
  double mu_min_ = 0.0;
  double mu_max_ = 0.0;
  ProblemConstants constants_;
  MixingInfo mixing_;
};

/// mu = mu_min(Sigma), L = mu_max(Sigma), A = 0, with R = state_radius():
///   B = 4 R^4 / mu_min, C = 2 B_w^2 R^2, Lg = R^2,
/// i.e. the pathwise bounds on ||g||^2 and ||w Z^T||^2 combined through
/// ||g + M||^2 <= 2||g||^2 + 2||M||^2. With stationary_sample_budget > 0 the
/// Lyapunov solution is cross-checked against a long-run estimate, and
/// DegenerateCovariance is raised if the estimate is not positive definite.
ProblemConstants sysid_constants(const SystemIdentification& problem, std::size_t stationary_sample_budget = 0,
                                 std::uint64_t seed = 0);

struct SysIdSpec {
  std::vector<double> eigenvalues{0.7, 0.5, -0.3};
  double noise_bound = 1.0;
  std::vector<double> z0;  // empty for Z_0 = 0
  /// Calibration factor c in t = ceil(log 2 / log(1/lambda_max)) c.
  double tmix_factor = 2.0;
  std::uint64_t seed = 1;
};

/// A* = Q diag(eigenvalues) Q^T with Q a seeded random rotation.
std::shared_ptr<SystemIdentification> make_sysid_problem(const SysIdSpec& spec);

/// ceil(log 2 / log(1/lambda)) * factor, at least 1.
int sysid_tmix_estimate(double lambda, double factor = 2.0);

}  // namespace plsgd
