#include "plsgd/verify.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

#include "plsgd/errors.hpp"
#include "plsgd/theory.hpp"

namespace plsgd {

namespace {

constexpr double kRel = 1e-9;

double rel_tol(double v) { return kRel * std::max(1.0, std::abs(v)); }

// a = 2/mu with the expected-bound K0 (never below mu a).
StepSchedule verify_schedule(const Problem& problem) {
  const double a = 2.0 / problem.constants().mu;
  const TheoryInputs in = theory_inputs(problem, StepSchedule(a, 1.0), 0.5);
  return StepSchedule(a, std::max(expected_k0_lower_bound(in), 2.0));
}

double sample_radius(const Problem& problem) {
  return 1.0 + 2.0 * (problem.initial_point() - problem.minimizer()).norm();
}

}  // namespace

Report verify_common(const Problem& problem, const VerifyOptions& options) {
  Report report;
  Rng rng = make_rng(options.seed, 0);
  const ProblemConstants& c = problem.constants();

  AbcVerifyOptions abc;
  abc.samples = options.samples;
  report.merge(abc_verify(problem, abc, rng));

  const Vector x_star = problem.minimizer();
  const double radius = sample_radius(problem);
  for (std::size_t s = 0; s < options.samples; ++s) {
    const Vector x = x_star + uniform_in_ball(rng, problem.dim(), radius);
    const Vector y = x_star + uniform_in_ball(rng, problem.dim(), radius);
    const double rhs = problem.objective(x) + problem.gradient(x).dot(y - x) + 0.5 * c.L * (y - x).squaredNorm();
    report.record("smooth.descent", problem.objective(y), rhs, rel_tol(rhs));
  }

  const StepSchedule schedule = verify_schedule(problem);
  const auto chain = problem.finite_chain();
  RunOptions run_opts;
  run_opts.store_norms = true;
  run_opts.store_iterates = static_cast<bool>(chain);
  run_opts.record_noise = static_cast<bool>(chain);
  const Trajectory traj = run(problem, schedule, options.path_length, options.seed, run_opts, 1);
  report.merge(audit_trajectory(problem, traj));

  const double mu = c.mu;
  report.merge(verify_zeta_bounds(StepSchedule(schedule.a, mu * schedule.a), mu, options.samples, options.seed));
  report.merge(verify_zeta_bounds(schedule, mu, options.samples, options.seed + 1));

  if (chain) {
    const int tmix = problem.mixing().tmix;
    const AbcConstants abc_c{c.A, c.B, c.C, c.L};
    PoissonSolver solver(chain);
    const GradMap g = [&problem](const Vector& x, std::size_t z) { return problem.markov_grad(x, z); };
    const std::size_t stride = std::max<std::size_t>(1, options.path_length / 200);
    for (std::size_t k = 0; k + 1 < traj.iterates.size(); k += stride) {
      const Vector& x = traj.iterates[k];
      const PoissonSolution sol =
          solver.solve(evaluate_on_states(g, x, chain->size()), problem.gradient(x), x);
      report.record("poisson.residual", poisson_residual(sol), 0.0, 1e-10 * (1.0 + sol.markov_grad.norm()));
      report.merge(verify_v_bounds(sol, tmix, abc_c, traj.suboptimality[k]));
      report.merge(verify_v_lipschitz(solver, g, x, traj.iterates[k + 1], tmix, c.Lg));
    }
  }
  return report;
}

Report verify_token(const TokenRegression& problem, const VerifyOptions& options) {
  Report report;
  Rng rng = make_rng(options.seed, 2);
  const std::size_t M = problem.nodes();
  const Distribution& q = problem.weights();
  const double N = static_cast<double>(problem.total_rows());

  std::vector<double> node_bound(M);
  for (std::size_t i = 0; i < M; ++i) {
    const Matrix& Ai = problem.data().A[i];
    const double smax = Eigen::JacobiSVD<Matrix>(Ai).singularValues()(0);
    const double Ni = static_cast<double>(Ai.rows());
    node_bound[i] = 2.0 * N * smax * smax / (Ni * Ni);
  }

  const Vector x_star = problem.minimizer();
  const double radius = sample_radius(problem);
  for (std::size_t s = 0; s < options.samples; ++s) {
    const Vector theta = x_star + uniform_in_ball(rng, problem.dim(), radius);
    const double global = problem.global_loss(theta);
    const Vector grad = problem.global_gradient(theta);
    double mixed = 0.0;
    Vector mixed_grad = Vector::Zero(problem.dim());
    for (std::size_t i = 0; i < M; ++i) {
      mixed += q[i] * problem.node_loss(theta, i);
      const Vector gi = token_grad(problem, theta, i);
      mixed_grad += q[i] * gi;
      const double rhs = node_bound[i] * global;
      report.record("token.node_gradient_bound", gi.squaredNorm(), rhs, rel_tol(rhs));
    }
    report.record("token.loss_identity", std::abs(mixed - global), 0.0, rel_tol(global));
    report.record("token.gradient_identity", (mixed_grad - grad).norm(), 0.0, rel_tol(grad.norm()));
    report.record("token.objective_matches", std::abs(problem.objective(theta) - global), 0.0, rel_tol(global));
  }
  report.record("token.f_star", std::abs(problem.global_loss(x_star) - problem.f_star()), 0.0,
                rel_tol(problem.f_star()));

  const FiniteChain& chain = *problem.finite_chain();
  const Matrix& P = chain.transition();
  const Distribution pi = stationary(chain);
  for (std::size_t i = 0; i < M; ++i) {
    report.record("token.stationary_is_q", std::abs(pi[i] - q[i]), 0.0, 1e-10);
    for (std::size_t j = 0; j < M; ++j) {
      const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
      const double lhs = q[i] * P(ii, jj), rhs = q[j] * P(jj, ii);
      report.record("token.detailed_balance", std::abs(lhs - rhs), 0.0, 1e-12);
    }
  }
  return report;
}

Report verify_subsample(const SubsampleRegression& problem, const VerifyOptions& options) {
  Report report;
  Rng rng = make_rng(options.seed, 3);
  const int b = problem.b();
  const std::size_t N = problem.size();

  // Window invariant and thinned state frequencies on one stationary path.
  SubsampleState state = problem.stationary_state(rng);
  std::vector<long long> last(N, -1);
  const std::size_t thin = 50;
  std::vector<double> counts(static_cast<std::size_t>(b), 0.0);
  double draws = 0.0;
  for (std::size_t k = 0; k < options.path_length; ++k) {
    const std::vector<std::size_t> picked = bminsep_step(state, rng);
    for (std::size_t i : picked) {
      if (last[i] >= 0) {
        report.record("subsample.window", static_cast<double>(b), static_cast<double>(static_cast<long long>(k) - last[i]));
      }
      last[i] = static_cast<long long>(k);
    }
    std::size_t selected = 0;
    for (std::size_t i = 0; i < N; ++i) selected += state.selected[i] ? 1 : 0;
    report.record_flag("subsample.batch_matches_selection", selected == picked.size());
    if (k % thin == 0) {
      for (int z : state.zeta) counts[static_cast<std::size_t>(z)] += 1.0;
      draws += static_cast<double>(N);
    }
  }
  const Distribution pi = bminsep_stationary(b, problem.rho());
  for (int s = 0; s < b; ++s) {
    const double p = pi[static_cast<std::size_t>(s)];
    const double freq = counts[static_cast<std::size_t>(s)] / draws;
    report.record("subsample.state_frequency", std::abs(freq - p), 4.0 * std::sqrt(p * (1.0 - p) / draws));
  }

  const Vector w_star = problem.minimizer();
  const double radius = sample_radius(problem);
  const double Lell = problem.example_smoothness();
  for (std::size_t s = 0; s < options.samples; ++s) {
    const Vector w = w_star + uniform_in_ball(rng, problem.dim(), radius);
    const SubsampleState z = problem.stationary_state(rng);
    const std::size_t m = z.batch_size();
    const Vector g = subsample_grad(problem, w, z);
    if (m == 0) {
      report.record("subsample.empty_batch_zero", g.norm(), 0.0);
      continue;
    }
    const double rhs = 2.0 * Lell * static_cast<double>(N) * problem.loss(w) / static_cast<double>(m);
    report.record("subsample.minibatch_bound", g.squaredNorm(), rhs, rel_tol(rhs));

    // Same bound with exactly one selected datapoint.
    SubsampleState one = z;
    std::fill(one.selected.begin(), one.selected.end(), 0);
    one.selected[static_cast<std::size_t>(s % N)] = 1;
    if (b > 1) {
      for (std::size_t i = 0; i < N; ++i) {
        if (one.zeta[i] == b - 1) one.zeta[i] = 0;
      }
      one.zeta[static_cast<std::size_t>(s % N)] = b - 1;
    }
    const double rhs1 = 2.0 * Lell * static_cast<double>(N) * problem.loss(w);
    report.record("subsample.single_bound", subsample_grad(problem, w, one).squaredNorm(), rhs1, rel_tol(rhs1));
  }
  return report;
}

Report verify_sysid(const SystemIdentification& problem, const VerifyOptions& options) {
  Report report;
  Rng rng = make_rng(options.seed, 4);
  const Eigen::Index d = problem.A_star().rows();
  const double R = problem.state_radius();
  const double Bw = problem.noise_bound();
  const StepSchedule schedule = verify_schedule(problem);

  SysIdState state = problem.initial_state();
  Matrix A = SystemIdentification::unvec(problem.initial_point(), d);
  const double grad_factor = 2.0 * std::pow(R, 4) / problem.mu_min();
  for (std::size_t k = 0; k < options.path_length; ++k) {
    const Vector z = state.z;
    report.record("sysid.state_radius", z.norm(), R);
    sysid_advance(state, rng);
    const Vector w = state.z - problem.A_star() * z;
    report.record("sysid.noise_bound", w.norm(), Bw, 1e-12 * (1.0 + Bw));

    const Matrix g = (A - problem.A_star()) * z * z.transpose();
    const double loss = problem.objective(SystemIdentification::vec(A));
    const double rhs = grad_factor * loss;
    report.record("sysid.gradient_bound", g.squaredNorm(), rhs, 1e-12 * rhs);
    report.record("sysid.martingale_bound", (w * z.transpose()).squaredNorm(), Bw * Bw * R * R,
                  1e-12 * Bw * Bw * R * R);

    const double alpha = stepsize(schedule, k);
    const Matrix next = sysid_grad_update(A, z, state.z, alpha);
    const Matrix expanded = A - alpha * g + alpha * w * z.transpose();
    report.record("sysid.update_identity", (next - expanded).norm(), 0.0, rel_tol(next.norm()));
    A = next;
  }
  return report;
}

Report verify_problem(const Problem& problem, const VerifyOptions& options) {
  Report report = verify_common(problem, options);
  if (const auto* t = dynamic_cast<const TokenRegression*>(&problem)) {
    report.merge(verify_token(*t, options));
  } else if (const auto* s = dynamic_cast<const SubsampleRegression*>(&problem)) {
    report.merge(verify_subsample(*s, options));
  } else if (const auto* y = dynamic_cast<const SystemIdentification*>(&problem)) {
    report.merge(verify_sysid(*y, options));
  }
  return report;
}

}  // namespace plsgd
