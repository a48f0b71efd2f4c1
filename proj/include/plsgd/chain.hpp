#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "plsgd/random.hpp"

namespace plsgd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Probability vector over the states of a finite chain.
class Distribution {
 public:
  /// Throws InvalidArgument unless weights are nonnegative and sum to 1 within 1e-12.
  explicit Distribution(std::vector<double> weights);

  static Distribution point_mass(std::size_t n, std::size_t state);
  static Distribution uniform(std::size_t n);
  /// Clips tiny negative round-off and renormalizes; for solver output.
  static Distribution normalized(const Vector& weights);

  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  std::span<const double> weights() const { return weights_; }
  Vector as_vector() const;

  /// Index drawn from this distribution.
  std::size_t sample(Rng& rng) const;

 private:
  std::vector<double> weights_;
};

/// Row-stochastic transition matrix over n >= 1 labelled states.
/// Immutable after construction.
class FiniteChain {
 public:
  /// Throws InvalidArgument unless the matrix is square, entries lie in
  /// [0,1] and every row sums to 1 within 1e-12.
  explicit FiniteChain(Matrix transition, std::vector<std::string> labels = {});

  /// Plain-text format: first token n, then n rows of n probabilities.
  static FiniteChain parse(std::istream& in);
  static FiniteChain load(const std::filesystem::path& path);
  void write(std::ostream& out) const;

  std::size_t size() const { return static_cast<std::size_t>(transition_.rows()); }
  const Matrix& transition() const { return transition_; }
  const std::vector<std::string>& labels() const { return labels_; }
  double operator()(std::size_t from, std::size_t to) const {
    return transition_(static_cast<Eigen::Index>(from), static_cast<Eigen::Index>(to));
  }

  /// Successor of `from` drawn from row `from`.
  std::size_t step(std::size_t from, Rng& rng) const;

 private:
  Matrix transition_;
  std::vector<std::string> labels_;
  std::vector<std::vector<double>> cumulative_;
};

/// Unique invariant distribution. Throws NonUniqueStationary when the
/// kernel of P^T - I has dimension > 1 (more than one closed class).
Distribution stationary(const FiniteChain& chain);

/// ||p - q||_TV = sum_i |p_i - q_i|, the unnormalized convention with range [0, 2].
double tv_distance(const Distribution& p, const Distribution& q);
double tv_distance(std::span<const double> p, std::span<const double> q);

/// Result of a mixing-time certification scan.
struct MixingCertificate {
  int tmix = 0;
  int horizon = 0;
  /// worst_tv[k] = max_z ||P^k(z,.) - pi||_TV for k = 0..horizon.
  std::vector<double> worst_tv;
  /// Dobrushin coefficient (1/2) max_{z,z'} ||P^t(z,.) - P^t(z',.)||_TV at t = tmix.
  double dobrushin_at_tmix = 0.0;
};

/// Horizon used by mixing_time when none is given:
/// max(64, 20 * first k with max_z ||P^k(z,.) - pi||_TV / 2 <= 1/2).
/// Throws MixingTimeNotFound if no such k exists up to `search_cap`.
int default_mixing_horizon(const FiniteChain& chain, int search_cap = 100000);

/// Smallest t in {1..horizon} such that for all 1 <= k <= horizon
///   max_z ||P^k(z,.) - pi||_TV <= 2^{-floor(k/t)}
/// and the Dobrushin coefficient of P^t is at most 1/2, which extends the
/// inequality to every k > horizon. Throws MixingTimeNotFound otherwise.
MixingCertificate certify_mixing(const FiniteChain& chain, std::optional<int> horizon = std::nullopt);

int mixing_time(const FiniteChain& chain, std::optional<int> horizon = std::nullopt);

/// Z_0 ~ start, Z_{k+1} ~ P(Z_k, .); deterministic given seed.
std::vector<std::size_t> sample_path(const FiniteChain& chain, const Distribution& start,
                                     std::size_t length, std::uint64_t seed);

/// F = (I - P + 1 pi^T)^{-1}. Throws SingularSystem if the system is singular.
Matrix fundamental_matrix(const FiniteChain& chain);
Matrix fundamental_matrix(const FiniteChain& chain, const Distribution& pi);

}  // namespace plsgd
