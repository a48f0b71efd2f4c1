#pragma once

#include "plsgd/theory.hpp"

namespace plsgd::fixtures {

// a = 3, mu = L = A = B = C = 1, t = 2, d = 2, Lg = 1, Delta0 = 1, delta = 0.5.
inline TheoryInputs worked(double K0 = 1000.0) {
  TheoryInputs in;
  in.a = 3;
  in.mu = 1;
  in.L = 1;
  in.A = 1;
  in.B = 1;
  in.C = 1;
  in.tmix = 2;
  in.d = 2;
  in.Lg = 1;
  in.Delta0 = 1;
  in.delta = 0.5;
  in.K0 = K0;
  return in;
}

// Frozen output of tests/oracles/theory_oracle.py (40-digit plug-in).
constexpr double kM1 = 4.8989794855663561964;
constexpr double kM2 = 0.81649658092772603273;
constexpr double kM3 = 12.898979485566356196;
constexpr double kM4 = 2.0;
constexpr double kD1 = 290.81278807978940753;
constexpr double kD2 = 1225.1135841132624078;
constexpr double kNu1 = 48021.765480053105197;
constexpr double kNu2 = 38304.866816856490778;
constexpr double kGamma1 = 3056.3172808422350378;
constexpr double kGamma2At1000 = 3676027.0538078646101;
constexpr double kK0High = 508033460.65980017618;
constexpr double kK0Expected = 2450.2271682265248156;
constexpr double kEnvelopeAt100 = 1.9441952310145124305;
constexpr double kExpectedAt1000 = 1.5959947506584666244;
constexpr double kMartNu1 = 1154.2217849616896484;
constexpr double kMartNu2 = 886.68673187167802727;
constexpr double kMartGamma1 = 12.232268228065703559;
constexpr double kMartGamma2At1000 = 142171.45254962153467;
constexpr double kMartK0 = 72731.207297577933881;

}  // namespace plsgd::fixtures
