#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "plsgd/problem.hpp"

namespace plsgd {

/// b-min-sep subsampling state: datapoint i sits in state zeta(i) in
/// {0, ..., b-1}; `selected` marks the current minibatch (zeta(i) = b-1 for
/// b > 1; an explicit mask is needed for b = 1 where every state is 0).
struct SubsampleState {
  std::vector<int> zeta;
  std::vector<char> selected;
  int b = 1;
  double rho = 1.0;

  std::size_t batch_size() const;
};

/// Datapoints at 0 move to b-1 with probability rho (selected) or stay at 0;
/// states s > 0 decrement. Returns the selected indices.
std::vector<std::size_t> bminsep_step(SubsampleState& state, Rng& rng);

/// pi~(0) = 1/(1+(b-1)rho), pi~(s) = rho/(1+(b-1)rho) for s >= 1.
Distribution bminsep_stationary(int b, double rho);

/// Single-datapoint b x b kernel.
Matrix bminsep_kernel(int b, double rho);

/// Probability that a datapoint is in the minibatch under stationarity:
/// rho/(1+(b-1)rho).
double bminsep_selection_probability(int b, double rho);

/// Least squares with the linear model phi(w; a_i) = <w, a_i>:
///   L(w) = (1/2N) sum_i (<w, a_i> - y_i)^2
///   L~(w; zeta) = (1/2) sum_{i in S} (<w, a_i> - y_i)^2 / |S|, 0 for S empty.
/// The stationary mean of grad L~ is c grad L with c = 1 - (1 - p)^N, p the
/// selection probability, so the problem's objective is f = c L.
class SubsampleRegression : public Problem {
 public:
  SubsampleRegression(Matrix features, Vector targets, int b, double rho);

  std::string kind() const override { return "subsample"; }
  Eigen::Index dim() const override { return features_.cols(); }
  double objective(const Vector& w) const override { return scale_ * loss(w); }
  Vector gradient(const Vector& w) const override { return scale_ * loss_gradient(w); }
  double f_star() const override { return scale_ * loss_star_; }
  double suboptimality(const Vector& w) const override;
  const ProblemConstants& constants() const override { return constants_; }
  MixingInfo mixing() const override { return mixing_; }
  std::unique_ptr<ChainCursor> start(Rng& rng) const override;
  nlohmann::json describe() const override;

  /// L(w) and its gradient.
  double loss(const Vector& w) const;
  Vector loss_gradient(const Vector& w) const;
  double loss_star() const { return loss_star_; }
  /// c = 1 - (1 - p)^N.
  double mean_scale() const { return scale_; }
  std::size_t size() const { return static_cast<std::size_t>(features_.rows()); }
  int b() const { return b_; }
  double rho() const { return rho_; }
  const Matrix& features() const { return features_; }
  const Vector& targets() const { return targets_; }
  /// max_i ||a_i||^2, the smoothness constant of each per-example loss.
  double example_smoothness() const { return example_L_; }
  /// Smallest eigenvalue of the tangent kernel A A^T.
  double tangent_kernel_min() const { return kernel_min_; }
  Vector minimizer() const override { return w_star_; }

  /// Draws every datapoint's state from pi~ independently.
  SubsampleState stationary_state(Rng& rng) const;

 private:
  Matrix features_;
  Vector targets_;
  int b_;
  double rho_;
  double scale_ = 1.0;
  Matrix gram_;  // A^T A / N
  Vector w_star_;
  double loss_star_ = 0.0;
  double example_L_ = 0.0;
  double kernel_min_ = 0.0;
  ProblemConstants constants_;
  MixingInfo mixing_;
};

/// Gradient of L~(w; state).
Vector subsample_grad(const SubsampleRegression& model, const Vector& w, const SubsampleState& state);

/// mu = c lambda_min^+(A^T A)/N, L = c lambda_max(A^T A)/N, A = 0,
/// B = 2 N max_i ||a_i||^2 / c, C = B f*, Lg = max_i ||a_i||^2.
ProblemConstants subsample_constants(const SubsampleRegression& model);

struct SubsampleSpec {
  std::size_t N = 30;
  std::size_t dim = 8;
  int b = 4;
  double rho = 0.5;
  double noise = 0.5;  // 0 gives realizable targets
  std::uint64_t seed = 1;
};

std::shared_ptr<SubsampleRegression> make_subsample_problem(const SubsampleSpec& spec);

}  // namespace plsgd
