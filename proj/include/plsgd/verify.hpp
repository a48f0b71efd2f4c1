#pragma once

#include <cstddef>
#include <cstdint>

#include "plsgd/config.hpp"
#include "plsgd/report.hpp"

namespace plsgd {

struct VerifyOptions {
  std::size_t samples = 1000;       // random points per sampled check
  std::size_t path_length = 10000;  // steps per pathwise check
  std::uint64_t seed = 1;
};

/// Checks shared by every problem:
///   abc.*           PL, gradient upper bound, ABC and Lg at sampled points
///   smooth.descent  f(y) <= f(x) + <grad f(x), y - x> + L/2 ||y - x||^2
///   engine.*        per-step PL / ABC / noise reassembly on one SGD path
///   zeta.*          step-product bounds for a = 2/mu at two K0 values
///   poisson.*       Poisson-solution bounds along the path (finite chains)
Report verify_common(const Problem& problem, const VerifyOptions& options);

/// Objective and gradient identities, per-node gradient bound and kernel
/// checks (detailed balance, pi = q).
Report verify_token(const TokenRegression& problem, const VerifyOptions& options);

/// Window invariant, stationary state frequencies and the minibatch bound
/// ||grad L~||^2 <= 2 Lell N L(w) / |S|.
Report verify_subsample(const SubsampleRegression& problem, const VerifyOptions& options);

/// Along an SGD path: ||Z_k|| <= R, ||g||^2 <= 2 R^4 L(A) / mu_min,
/// ||w Z^T||^2 <= B^2 R^2, and the update equals A - alpha g + alpha w Z^T.
Report verify_sysid(const SystemIdentification& problem, const VerifyOptions& options);

/// verify_common plus the problem-specific suite.
Report verify_problem(const Problem& problem, const VerifyOptions& options);

}  // namespace plsgd
