#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "plsgd/chain.hpp"
#include "plsgd/random.hpp"

namespace plsgd {

/// Certified constants of a problem instance:
///   PL        ||grad f||^2 >= 2 mu (f - f*)
///   smooth    grad f is L-Lipschitz
///   ABC       ||G||^2 <= A ||grad f||^2 + B (f - f*) + C   (covers g alone as well)
///   Lg        ||g(x,z) - g(x',z)|| <= Lg ||x - x'||
struct ProblemConstants {
  double mu = 0.0;
  double L = 0.0;
  double A = 0.0;
  double B = 0.0;
  double C = 0.0;
  double Lg = 0.0;
};

nlohmann::json to_json(const ProblemConstants& c);

/// Mixing time used by the theory module. `certified` is false when it is
/// an estimate (continuous or very large chains).
struct MixingInfo {
  int tmix = 1;
  bool certified = false;
  std::string method;
};

/// One draw of the stochastic gradient G_k = g(x_k, Z_k) + M_{k+1}.
struct NoiseSample {
  Vector markov;      // g(x_k, Z_k)
  Vector martingale;  // M_{k+1}; zero when the problem has none
};

/// Per-trial mutable Markov state. Owned by a single run.
class ChainCursor {
 public:
  virtual ~ChainCursor() = default;
  /// g(x, Z_k) at the current state.
  virtual Vector markov_grad(const Vector& x) const = 0;
  /// Returns g(x, Z_k) and M_{k+1}, then advances Z_k -> Z_{k+1}.
  virtual NoiseSample sample(const Vector& x, Rng& rng) = 0;
  /// Index of Z_k when the chain is an explicit FiniteChain.
  virtual std::optional<std::size_t> state() const { return std::nullopt; }
};

/// Objective, noise model and certified constants of one testbed.
/// Instances are immutable and may be shared across threads.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual std::string kind() const = 0;
  virtual Eigen::Index dim() const = 0;
  virtual double objective(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;
  virtual double f_star() const = 0;
  /// A point attaining f*.
  virtual Vector minimizer() const = 0;
  /// f(x) - f*; overridden where a cancellation-free form exists.
  virtual double suboptimality(const Vector& x) const { return objective(x) - f_star(); }
  virtual const ProblemConstants& constants() const = 0;
  virtual MixingInfo mixing() const = 0;

  virtual Vector initial_point() const { return x0_.size() == dim() ? x0_ : Vector::Zero(dim()); }
  void set_initial_point(Vector x0);

  /// Draws Z_0 and returns the per-trial cursor.
  virtual std::unique_ptr<ChainCursor> start(Rng& rng) const = 0;

  /// Explicit kernel, when the Markov chain is finite and small.
  virtual std::shared_ptr<const FiniteChain> finite_chain() const { return nullptr; }
  /// g(x, z) for an explicit finite chain state.
  virtual Vector markov_grad(const Vector& x, std::size_t z) const;
  /// Whether sample() may return a nonzero martingale term.
  virtual bool has_martingale() const { return false; }

  virtual nlohmann::json describe() const = 0;

 protected:
  Vector x0_;
};

}  // namespace plsgd
