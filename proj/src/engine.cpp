#include "plsgd/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "plsgd/errors.hpp"

namespace plsgd {

namespace {

constexpr double kIdentityTol = 1e-10;
constexpr double kInequalityTol = 1e-9;

double tol_for(double scale) { return kInequalityTol * std::max(1.0, std::abs(scale)); }

}  // namespace

StepSchedule::StepSchedule(double a_, double K0_) : a(a_), K0(K0_) {
  if (!(a > 0.0) || !std::isfinite(a)) throw InvalidArgument("stepsize numerator a must be positive");
  if (!(K0 > 0.0) || !std::isfinite(K0)) throw InvalidArgument("stepsize offset K0 must be positive");
}

double stepsize(const StepSchedule& s, std::size_t k) { return s.a / (static_cast<double>(k) + s.K0); }

double zeta(const StepSchedule& s, double mu, long long m, long long n) {
  double prod = 1.0;
  for (long long j = std::max(m, 0LL); j <= n; ++j) {
    prod *= 1.0 - mu * s.a / (static_cast<double>(j) + s.K0);
    if (prod == 0.0) break;
  }
  return prod;
}

Trajectory run(const Problem& problem, const StepSchedule& schedule, std::size_t horizon, std::uint64_t seed,
               const RunOptions& options, std::uint64_t stream) {
  const ProblemConstants& c = problem.constants();
  if (schedule.a * c.mu < 2.0 * (1.0 - 1e-12)) {
    throw HypothesisViolated("stepsize numerator a = " + std::to_string(schedule.a) + " is below 2/mu = " +
                             std::to_string(2.0 / c.mu));
  }
  std::optional<PoissonSolver> solver;
  std::shared_ptr<const FiniteChain> chain = problem.finite_chain();
  if (options.record_noise) {
    if (!chain) throw InvalidArgument("noise recording needs a problem with an explicit finite chain");
    solver.emplace(chain);
  }

  Trajectory traj;
  traj.seed = seed;
  traj.stream = stream;
  traj.suboptimality.reserve(horizon + 1);
  if (options.store_norms) {
    traj.grad_norm_sq.reserve(horizon + 1);
    traj.sample_norm_sq.reserve(horizon);
  }
  if (options.store_iterates) traj.iterates.reserve(horizon + 1);
  if (options.record_noise) traj.noise.reserve(horizon);

  Rng rng = make_rng(seed, stream);
  Vector x = problem.initial_point();
  std::unique_ptr<ChainCursor> cursor = problem.start(rng);
  const bool finite_states = cursor->state().has_value();
  if (finite_states) traj.states.reserve(horizon + 1);

  auto observe = [&](std::size_t k) {
    const double delta = problem.suboptimality(x);
    if (!std::isfinite(delta) || !x.allFinite()) throw NonFinite("iterate left the representable range", k);
    traj.suboptimality.push_back(delta);
    if (options.store_iterates) traj.iterates.push_back(x);
    if (finite_states) traj.states.push_back(*cursor->state());
  };

  observe(0);
  for (std::size_t k = 0; k < horizon; ++k) {
    Vector grad;
    if (options.store_norms || options.record_noise) grad = problem.gradient(x);
    if (options.store_norms) traj.grad_norm_sq.push_back(grad.squaredNorm());

    const std::optional<std::size_t> z_k = cursor->state();
    NoiseSample s = cursor->sample(x, rng);
    Vector G = s.markov;
    if (s.martingale.size() == G.size()) G += s.martingale;
    if (options.store_norms) traj.sample_norm_sq.push_back(G.squaredNorm());

    if (options.record_noise) {
      const std::size_t n = chain->size();
      Matrix g_at_x(static_cast<Eigen::Index>(n), x.size());
      for (std::size_t z = 0; z < n; ++z) g_at_x.row(static_cast<Eigen::Index>(z)) = problem.markov_grad(x, z).transpose();
      const PoissonSolution sol = solver->solve(g_at_x, grad, x);
      NoiseDecomposition dec = decompose_step(sol, *z_k, *cursor->state());
      StepNoise rec;
      rec.markov_mart = std::move(dec.markov_mart);
      rec.correction = std::move(dec.correction);
      rec.raw_mart = s.martingale.size() == G.size() ? s.martingale : Vector::Zero(G.size());
      rec.markov_noise = s.markov - grad;
      traj.noise.push_back(std::move(rec));
    }

    x -= stepsize(schedule, k) * G;
    observe(k + 1);
  }
  if (options.store_norms) traj.grad_norm_sq.push_back(problem.gradient(x).squaredNorm());
  return traj;
}

Report verify_zeta_bounds(const StepSchedule& s, double mu, std::size_t trials, std::uint64_t seed,
                          std::size_t max_k) {
  const double mu_a = mu * s.a;
  if (!(mu_a > 1.0)) throw HypothesisViolated("zeta bounds need mu a > 1");
  if (s.K0 < mu_a) throw HypothesisViolated("zeta bounds need K0 >= mu a");

  Report report;
  auto record_product = [&](long long m, long long n) {
    const double lhs = zeta(s, mu, m, n);
    const double rhs = std::pow((static_cast<double>(m) + s.K0) / (static_cast<double>(n) + s.K0 + 1.0), mu_a);
    report.record("zeta.product", lhs, rhs, 1e-12 * rhs);
  };

  // zeta_{m,n} for a fixed m is a running product over n.
  for (long long m = 0; m <= 200; ++m) {
    double prod = 1.0;
    for (long long n = m; n <= 200; ++n) {
      prod *= 1.0 - mu * s.a / (static_cast<double>(n) + s.K0);
      const double rhs = std::pow((static_cast<double>(m) + s.K0) / (static_cast<double>(n) + s.K0 + 1.0), mu_a);
      report.record("zeta.product", prod, rhs, 1e-12 * rhs);
    }
  }
  Rng rng = make_rng(seed, 0x7a657461);
  std::uniform_int_distribution<long long> pick(0, 10000);
  for (std::size_t i = 0; i < trials; ++i) {
    long long m = pick(rng), n = pick(rng);
    if (m > n) std::swap(m, n);
    record_product(m, n);
  }

  // S1(k) = sum_{l<k} alpha_l zeta_{l+1,k-1} obeys S1(k+1) = (1 - mu alpha_k) S1(k) + alpha_k,
  // and S2 likewise with alpha_k^2.
  const double e = std::exp(1.0);
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t k = 1; k <= max_k; ++k) {
    const double alpha = stepsize(s, k - 1);
    s1 = (1.0 - mu * alpha) * s1 + alpha;
    s2 = (1.0 - mu * alpha) * s2 + alpha * alpha;
    const double r1 = (e - 1.0) / mu;
    const double r2 = e * s.a * s.a / ((mu_a - 1.0) * (static_cast<double>(k) + s.K0));
    report.record("zeta.sum_alpha", s1, r1, 1e-12 * r1);
    report.record("zeta.sum_alpha_sq", s2, r2, 1e-12 * r2);
  }
  return report;
}

Report audit_trajectory(const Problem& problem, const Trajectory& traj) {
  if (traj.grad_norm_sq.size() != traj.suboptimality.size()) {
    throw InvalidArgument("audit_trajectory needs a run with store_norms");
  }
  const ProblemConstants& c = problem.constants();
  Report report;
  for (std::size_t k = 0; k < traj.suboptimality.size(); ++k) {
    const double delta = traj.suboptimality[k];
    const double gsq = traj.grad_norm_sq[k];
    report.record("engine.nonnegative_gap", -delta, 0.0, 1e-12);
    report.record("engine.pl", 2.0 * c.mu * delta, gsq, tol_for(gsq));
    report.record("engine.gradient_upper", gsq, 2.0 * c.L * delta, tol_for(2.0 * c.L * delta));
    if (k < traj.sample_norm_sq.size()) {
      const double rhs = c.A * gsq + c.B * delta + c.C;
      report.record("engine.abc", traj.sample_norm_sq[k], rhs, tol_for(rhs));
    }
  }
  for (std::size_t k = 0; k < traj.noise.size(); ++k) {
    const StepNoise& n = traj.noise[k];
    const Vector diff = n.markov_noise - (n.markov_mart - n.correction);
    const double scale = std::max(1.0, n.markov_noise.norm());
    report.record("engine.noise_reassembly", diff.norm(), 0.0, kIdentityTol * scale);
  }
  return report;
}

void write_trajectory_csv(std::ostream& out, const std::vector<Trajectory>& trials) {
  const bool noise = !trials.empty() && std::all_of(trials.begin(), trials.end(), [](const Trajectory& t) {
    return !t.noise.empty();
  });
  const auto old = out.precision(17);
  out << "trial,k,delta,grad_norm_sq";
  if (noise) out << ",norm_markov_mart,norm_correction,norm_raw_mart";
  out << '\n';
  for (std::size_t t = 0; t < trials.size(); ++t) {
    const Trajectory& tr = trials[t];
    for (std::size_t k = 0; k < tr.suboptimality.size(); ++k) {
      out << t << ',' << k << ',' << tr.suboptimality[k] << ',';
      if (k < tr.grad_norm_sq.size()) {
        out << tr.grad_norm_sq[k];
      } else {
        out << "nan";
      }
      if (noise) {
        if (k < tr.noise.size()) {
          const StepNoise& n = tr.noise[k];
          out << ',' << n.markov_mart.norm() << ',' << n.correction.norm() << ',' << n.raw_mart.norm();
        } else {
          out << ",nan,nan,nan";
        }
      }
      out << '\n';
    }
  }
  out.precision(old);
}

}  // namespace plsgd
