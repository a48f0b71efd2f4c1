#pragma once

#include <cstddef>
#include <cstdint>

#include <json.hpp>

#include "plsgd/engine.hpp"
#include "plsgd/problem.hpp"
#include "plsgd/report.hpp"

namespace plsgd {

struct TheoryInputs {
  double mu = 0.0;
  double L = 0.0;
  double A = 0.0;
  double B = 0.0;
  double C = 0.0;
  double Lg = 0.0;
  double tmix = 1.0;
  double d = 1.0;
  double a = 0.0;
  double K0 = 0.0;
  double delta = 0.5;
  double Delta0 = 0.0;

  /// u = 2AL + B.
  double u() const { return 2.0 * A * L + B; }
};

/// Inputs from a problem's certified constants, its mixing time, dimension
/// and Delta0 = f(x0) - f*.
TheoryInputs theory_inputs(const Problem& problem, const StepSchedule& schedule, double delta);

struct DConstants {
  double m1 = 0.0, m2 = 0.0, m3 = 0.0, m4 = 0.0;
  double D1 = 0.0, D2 = 0.0;
};

/// m1..m4 from the proofs of the <grad f, V> bounds, with u = 2AL + B:
///   u > 0:          m1 = 2 sqrt(2u/L),  m2 = 2 sqrt(L C^2 / (2u))
///   u = 0, C > 0:   m1 = 2,             m2 = C        (from sqrt(2 L C D) <= L D + C/2)
///   u = C = 0:      m1 = m2 = 0
///   m3 = 2 sqrt(2u/L) + 2u/L + 2 [C > 0],  m4 = 2C
/// and
///   D1 = 2a m1 t L sqrt(d) Delta0 + 10 a m2 t sqrt(d) + e a^2 m4 t (L+Lg) sqrt(d) / (mu a - 1)
///   D2 = 8a m1 t L sqrt(d) + e a^2 m3 t (L+Lg) L sqrt(d) / (mu a - 1).
/// Throws HypothesisViolated unless mu a > 1.
DConstants d_constants(const TheoryInputs& in);

struct GammaConstants {
  double nu1 = 0.0, nu2 = 0.0;
  double Gamma1 = 0.0, Gamma2 = 0.0;
  double Kbar0 = 0.0;    // K0 / log(2/delta)
  double logKbar0 = 0.0; // log(2 K0/delta) / log(2/delta)
};

/// nu1 = 32 (ae)^2 L (t^2 d + 1) [u/(2 mu a - 3) (2 Delta0 + D1/D2 + e a^2 C L / D2) + C/(2 mu a - 2)]
/// nu2 = 64 (ae)^2 L (t^2 d + 1) u / (2 mu a - 3)
/// Gamma1 = e a^2 C L + 2 (D1 + D2 Delta0)
/// Gamma2 = 4 nu1 (1 + 3 logKbar0) + 2 sqrt(nu1 (Kbar0 Delta0 + 2 Gamma1)).
/// The u-term of nu1 is 0 when u = 0 (then D2 may vanish).
/// Throws HypothesisViolated unless 2 mu a > 3.
GammaConstants gamma_constants(const TheoryInputs& in, const DConstants& dc);

/// K >= C' log(2K/delta)(1 + log(2K/delta)/log(2/delta)) solved by
/// K = c1 log(2 c1/delta), c1 = 12 C' log(12 C') + 6 C'. Requires C' >= 1.
double k0_solver(double C, double delta);

struct K0Terms {
  double smoothness = 0.0;    // (aL/2)(2A + B/mu), or aL(2A + B/mu) for the expected bound
  double mu_a = 0.0;          // mu a
  double twice_D2 = 0.0;      // 2 D2
  double concentration = 0.0; // 24 nu2 (2 log(48 nu2) + 1) log(48 nu2 (2 log(48 nu2) + 1)/delta)

  double max() const;
};

/// Terms of the high-probability K0 requirement. The fourth term is the
/// solver with C' = 4 nu2 (0 when nu2 = 0, C' raised to 1 when below 1).
K0Terms k0_terms(const TheoryInputs& in);
double k0_lower_bound(const TheoryInputs& in);

/// max{aL(2A + B/mu), mu a, 2 D2}: the requirement of the expected bound.
K0Terms expected_k0_terms(const TheoryInputs& in);
double expected_k0_lower_bound(const TheoryInputs& in);

struct Hypotheses {
  bool a_ge_2_over_mu = false;
  bool mu_a_gt_1 = false;
  bool two_mu_a_gt_3 = false;
  bool k0_feasible = false;           // high-probability bound
  bool k0_feasible_expected = false;  // expected bound
};

struct TheoryConstants {
  TheoryInputs inputs;
  DConstants d;
  GammaConstants gamma;
  K0Terms k0;
  K0Terms k0_expected;
  double K0_required = 0.0;
  double K0_expected_required = 0.0;
  Hypotheses hypotheses;

  nlohmann::json to_json() const;
};

/// All constants; throws HypothesisViolated when 2 mu a <= 3.
TheoryConstants compute_theory(const TheoryInputs& in);

/// Lambda(k, delta) = K0 Delta0 + Gamma1 + Gamma2 log(2K0/delta) + Gamma2 log(2k/delta).
double lambda_numerator(const TheoryConstants& tc, std::size_t k);

/// Lambda(k, delta) / (k + K0), k >= 1. Throws InfeasibleK0.
double hp_envelope(const TheoryConstants& tc, std::size_t k);

/// Bound defining the good event E_k: Delta0 at k = 0, the envelope after.
/// `scale` multiplies the bound (1 for the theorem).
double good_event_bound(const TheoryConstants& tc, std::size_t k, double scale = 1.0);

/// (Delta0 (K0 + 2 D2) + e a^2 C L + 2 D1) / (k + K0). Throws InfeasibleK0.
double expected_bound(const TheoryConstants& tc, std::size_t k);

struct MartingaleConstants {
  double nu1 = 0.0, nu2 = 0.0;
  double Gamma1 = 0.0, Gamma2 = 0.0;
  double Kbar0 = 0.0;
  double K0_required = 0.0;  // max{(aL/2)(2A + B/mu), mu a, 8 nu2 log(16 nu2/delta)}
};

/// nu1 = 8L(ae)^2 ((2L(A+1)+B)/(2 mu a - 3) Delta0 + C/(mu a - 1)) + e a^2 C L / 16
/// nu2 = 8L(ae)^2 (2L(A+1)+B)/(2 mu a - 3)
/// Gamma1 = e a^2 C L / 2
/// Gamma2 = 12 nu1 (1 + log(8 nu1)) + 2 sqrt(nu1 (Kbar0 Delta0 + e a^2 C L)), with 0 log 0 = 0.
/// Throws HypothesisViolated unless 2 mu a > 3.
MartingaleConstants martingale_only_constants(const TheoryInputs& in);

/// (Delta0 K0 + Gamma1 + Gamma2 log(2k/delta)) / (k + K0) for k >= 1.
double martingale_envelope(const TheoryInputs& in, const MartingaleConstants& mc, std::size_t k);

struct AbcVerifyOptions {
  std::size_t samples = 1000;
  /// Radius of the sampling ball around the minimizer; <= 0 picks
  /// 1 + 2 ||x0 - x*||.
  double radius = 0.0;
};

/// Samples x around the minimizer and checks, with the certified constants:
///   abc.pl              ||grad f||^2 >= 2 mu Delta
///   abc.gradient_upper  ||grad f||^2 <= 2 L Delta
///   abc.markov          ||g(x,z)||^2 <= A||grad f||^2 + B Delta + C
///   abc.sample          ||G||^2      <= A||grad f||^2 + B Delta + C
///   abc.lipschitz       ||g(x,z) - g(x',z)|| <= Lg ||x - x'||
/// over every state of an explicit chain, or along a sampled path otherwise.
Report abc_verify(const Problem& problem, const AbcVerifyOptions& options, Rng& rng);

}  // namespace plsgd
