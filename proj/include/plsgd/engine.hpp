#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "plsgd/poisson.hpp"
#include "plsgd/problem.hpp"
#include "plsgd/report.hpp"

namespace plsgd {

/// alpha_k = a / (k + K0).
struct StepSchedule {
  double a = 1.0;
  double K0 = 1.0;

  StepSchedule() = default;
  /// Throws InvalidArgument unless a > 0 and K0 > 0.
  StepSchedule(double a_, double K0_);
};

double stepsize(const StepSchedule& s, std::size_t k);

/// prod_{j=m}^{n} (1 - mu alpha_j); 1 when n < m.
double zeta(const StepSchedule& s, double mu, long long m, long long n);

struct StepNoise {
  Vector markov_mart;  // M~_{k+1}
  Vector correction;   // d_k
  Vector raw_mart;     // M_{k+1}
  Vector markov_noise; // g(x_k, Z_k) - grad f(x_k)
};

struct Trajectory {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::vector<Vector> iterates;           // x_0..x_H when stored
  std::vector<double> suboptimality;      // Delta_0..Delta_H
  std::vector<double> grad_norm_sq;       // ||grad f(x_k)||^2, k = 0..H, when stored
  std::vector<double> sample_norm_sq;     // ||G_k||^2, k = 0..H-1, when stored
  std::vector<std::size_t> states;        // Z_0..Z_H for finite chains
  std::vector<StepNoise> noise;           // k = 0..H-1 when recorded

  std::size_t horizon() const { return suboptimality.empty() ? 0 : suboptimality.size() - 1; }
};

struct RunOptions {
  bool record_noise = false;
  bool store_iterates = false;
  /// Gradient and sample norms, needed by audit_trajectory.
  bool store_norms = false;
};

/// SGD x_{k+1} = x_k - alpha_k G_k with G_k = g(x_k, Z_k) + M_{k+1}.
/// Deterministic in (seed, stream). Throws NonFinite when an iterate or
/// the suboptimality leaves the representable range. Requires a >= 2/mu.
Trajectory run(const Problem& problem, const StepSchedule& schedule, std::size_t horizon, std::uint64_t seed,
               const RunOptions& options = {}, std::uint64_t stream = 0);

/// Lemma checks on (m, n, k) grids:
///   zeta_{m,n} <= ((m+K0)/(n+K0+1))^{mu a}
///   sum_{l<k} alpha_l zeta_{l+1,k-1} <= (e-1)/mu
///   sum_{l<k} alpha_l^2 zeta_{l+1,k-1} <= e a^2 / ((mu a - 1)(k + K0))
/// An exhaustive sweep up to 200 plus `trials` random (m, n) pairs up to 10^4,
/// and running sums for k <= max_k. Throws HypothesisViolated unless
/// K0 >= mu a and mu a > 1.
Report verify_zeta_bounds(const StepSchedule& s, double mu, std::size_t trials, std::uint64_t seed = 0,
                          std::size_t max_k = 10000);

/// PL, gradient upper bound and ABC on every step of a trajectory that was
/// run with store_norms; noise reassembly when noise was recorded.
Report audit_trajectory(const Problem& problem, const Trajectory& traj);

/// CSV with columns trial,k,delta,grad_norm_sq and, when recorded,
/// norm_markov_mart,norm_correction,norm_raw_mart.
void write_trajectory_csv(std::ostream& out, const std::vector<Trajectory>& trials);

}  // namespace plsgd
