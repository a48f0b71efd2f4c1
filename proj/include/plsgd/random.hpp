#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace plsgd {

using Rng = std::mt19937_64;

/// Independent generator for stream `stream` of a run seeded with `seed`.
/// Trials of one experiment use stream = trial index, so the draws of a
/// trial do not depend on which worker thread executes it.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x9e3779b9u};
  return Rng(seq);
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline double standard_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

inline Eigen::VectorXd normal_vector(Rng& rng, Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = standard_normal(rng);
  return v;
}

/// Uniform sample from the closed Euclidean ball of the given radius.
inline Eigen::VectorXd uniform_in_ball(Rng& rng, Eigen::Index n, double radius) {
  Eigen::VectorXd v = normal_vector(rng, n);
  const double norm = v.norm();
  if (norm == 0.0 || radius == 0.0) return Eigen::VectorXd::Zero(n);
  const double r = radius * std::pow(uniform01(rng), 1.0 / static_cast<double>(n));
  return v * (r / norm);
}

}  // namespace plsgd
