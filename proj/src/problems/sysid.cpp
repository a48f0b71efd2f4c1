#include "plsgd/sysid.hpp"

#include <algorithm>
#include <cmath>

#include "plsgd/errors.hpp"

namespace plsgd {

namespace {

class SysIdCursor : public ChainCursor {
 public:
  SysIdCursor(const SystemIdentification& p, SysIdState s) : p_(p), s_(std::move(s)) {}

  Vector markov_grad(const Vector& x) const override {
    const Eigen::Index d = s_.z.size();
    const Matrix A = SystemIdentification::unvec(x, d);
    return SystemIdentification::vec((A - p_.A_star()) * s_.z * s_.z.transpose());
  }

  NoiseSample sample(const Vector& x, Rng& rng) override {
    const Eigen::Index d = s_.z.size();
    NoiseSample out;
    out.markov = markov_grad(x);
    const Vector w = uniform_in_ball(rng, d, s_.noise_bound);
    out.martingale = SystemIdentification::vec(-w * s_.z.transpose());
    s_.z = s_.A_star * s_.z + w;
    return out;
  }

 private:
  const SystemIdentification& p_;
  SysIdState s_;
};

}  // namespace

void sysid_advance(SysIdState& state, Rng& rng) {
  if (state.A_star.rows() != state.z.size() || state.A_star.cols() != state.z.size()) {
    throw DimensionMismatch("A* and Z have inconsistent dimensions");
  }
  state.z = state.A_star * state.z + uniform_in_ball(rng, state.z.size(), state.noise_bound);
}

Matrix sysid_grad_update(const Matrix& A_k, const Vector& z_k, const Vector& z_k1, double alpha) {
  if (A_k.rows() != z_k1.size() || A_k.cols() != z_k.size()) throw DimensionMismatch("sysid update shapes differ");
  return A_k - alpha * (A_k * z_k - z_k1) * z_k.transpose();
}

Matrix lyapunov_solve(const Matrix& A, const Matrix& Q) {
  const Eigen::Index d = A.rows();
  if (A.cols() != d || Q.rows() != d || Q.cols() != d) throw DimensionMismatch("lyapunov_solve needs square inputs");
  // vec(A S A^T) = (A kron A) vec(S)
  Matrix K(d * d, d * d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) K.block(i * d, j * d, d, d) = A(i, j) * A;
  const Matrix M = Matrix::Identity(d * d, d * d) - K;
  Eigen::FullPivLU<Matrix> lu(M);
  if (!lu.isInvertible()) throw SingularSystem("Lyapunov operator is singular (A has an eigenvalue on the unit circle)");
  const Vector q = Eigen::Map<const Vector>(Q.data(), d * d);
  const Vector s = lu.solve(q);
  Matrix S = Eigen::Map<const Matrix>(s.data(), d, d);
  return 0.5 * (S + S.transpose());
}

Matrix ball_covariance(Eigen::Index d, double radius) {
  return (radius * radius / static_cast<double>(d + 2)) * Matrix::Identity(d, d);
}

Matrix estimate_stationary_covariance(const SysIdState& state, std::size_t steps, std::size_t burn_in,
                                      std::uint64_t seed) {
  if (steps == 0) throw InvalidArgument("covariance estimate needs at least one step");
  SysIdState s = state;
  s.z = Vector::Zero(state.A_star.rows());
  Rng rng = make_rng(seed, 0x6c79617075);
  for (std::size_t k = 0; k < burn_in; ++k) sysid_advance(s, rng);
  Matrix acc = Matrix::Zero(s.z.size(), s.z.size());
  for (std::size_t k = 0; k < steps; ++k) {
    acc.noalias() += s.z * s.z.transpose();
    sysid_advance(s, rng);
  }
  return acc / static_cast<double>(steps);
}

int sysid_tmix_estimate(double lambda, double factor) {
  if (!(lambda >= 0.0 && lambda < 1.0)) throw InvalidArgument("sysid mixing estimate needs 0 <= lambda < 1");
  if (lambda == 0.0) return std::max(1, static_cast<int>(std::ceil(factor)));
  const double base = std::ceil(std::log(2.0) / std::log(1.0 / lambda));
  return std::max(1, static_cast<int>(std::ceil(base * factor)));
}

Matrix SystemIdentification::unvec(const Vector& x, Eigen::Index d) {
  if (x.size() != d * d) throw DimensionMismatch("parameter vector is not d*d long");
  return Eigen::Map<const Matrix>(x.data(), d, d);
}

Vector SystemIdentification::vec(const Matrix& A) { return Eigen::Map<const Vector>(A.data(), A.size()); }

SystemIdentification::SystemIdentification(Matrix A_star, double noise_bound, Vector z0, double tmix_factor)
    : A_star_(std::move(A_star)), noise_bound_(noise_bound), z0_(std::move(z0)) {
  const Eigen::Index d = A_star_.rows();
  if (d == 0 || A_star_.cols() != d) throw InvalidArgument("A* must be a nonempty square matrix");
  if (!(noise_bound_ >= 0.0)) throw InvalidArgument("noise bound must be nonnegative");
  if (z0_.size() == 0) z0_ = Vector::Zero(d);
  if (z0_.size() != d) throw DimensionMismatch("Z_0 has the wrong dimension");
  lambda_ = Eigen::JacobiSVD<Matrix>(A_star_).singularValues()(0);
  if (!(lambda_ < 1.0)) throw InvalidArgument("||A*||_2 must be strictly below 1");
  sigma_ = lyapunov_solve(A_star_, ball_covariance(d, noise_bound_));
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma_, Eigen::EigenvaluesOnly);
  mu_min_ = eig.eigenvalues().minCoeff();
  mu_max_ = eig.eigenvalues().maxCoeff();
  if (!(mu_min_ > 0.0)) throw DegenerateCovariance("stationary covariance is not positive definite");
  constants_ = sysid_constants(*this);
  mixing_.tmix = sysid_tmix_estimate(lambda_, tmix_factor);
  mixing_.certified = false;
  mixing_.method = "ceil(log 2 / log(1/lambda_max)) * " + std::to_string(tmix_factor) + " (estimate)";
}

double SystemIdentification::objective(const Vector& x) const {
  const Matrix E = unvec(x, A_star_.rows()) - A_star_;
  return 0.5 * (E * sigma_ * E.transpose()).trace();
}

Vector SystemIdentification::gradient(const Vector& x) const {
  const Matrix E = unvec(x, A_star_.rows()) - A_star_;
  return vec(E * sigma_);
}

double SystemIdentification::state_radius() const {
  return std::max(z0_.norm(), noise_bound_ / (1.0 - lambda_));
}

SysIdState SystemIdentification::initial_state() const {
  SysIdState s;
  s.A_star = A_star_;
  s.noise_bound = noise_bound_;
  s.z = z0_;
  s.lambda_max = lambda_;
  return s;
}

std::unique_ptr<ChainCursor> SystemIdentification::start(Rng&) const {
  return std::make_unique<SysIdCursor>(*this, initial_state());
}

nlohmann::json SystemIdentification::describe() const {
  return {{"kind", kind()},
          {"state_dim", A_star_.rows()},
          {"dim", dim()},
          {"noise_bound", noise_bound_},
          {"lambda_max", lambda_},
          {"mu_min", mu_min_},
          {"mu_max", mu_max_},
          {"state_radius", state_radius()},
          {"tmix", mixing_.tmix},
          {"tmix_certified", mixing_.certified},
          {"tmix_method", mixing_.method}};
}

ProblemConstants sysid_constants(const SystemIdentification& problem, std::size_t stationary_sample_budget,
                                 std::uint64_t seed) {
  if (stationary_sample_budget > 0) {
    const Matrix est =
        estimate_stationary_covariance(problem.initial_state(), stationary_sample_budget, 1000, seed);
    const double low = Eigen::SelfAdjointEigenSolver<Matrix>(est, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    if (!(low > 1e-12)) throw DegenerateCovariance("estimated stationary covariance is not positive definite");
  }
  const double R = problem.state_radius();
  const double R2 = R * R;
  const double Bw = problem.noise_bound();
  ProblemConstants c;
  c.mu = problem.mu_min();
  c.L = problem.mu_max();
  c.A = 0.0;
  c.B = 4.0 * R2 * R2 / problem.mu_min();
  c.C = 2.0 * Bw * Bw * R2;
  c.Lg = R2;
  return c;
}

std::shared_ptr<SystemIdentification> make_sysid_problem(const SysIdSpec& spec) {
  const auto d = static_cast<Eigen::Index>(spec.eigenvalues.size());
  if (d == 0) throw InvalidArgument("sysid needs at least one eigenvalue");
  for (double l : spec.eigenvalues) {
    if (!(std::abs(l) < 1.0)) throw InvalidArgument("sysid eigenvalues must lie strictly inside the unit disc");
  }
  Rng rng = make_rng(spec.seed, 0x73797369);
  Matrix G(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) G(i, j) = standard_normal(rng);
  Eigen::HouseholderQR<Matrix> qr(G);
  const Matrix Q = qr.householderQ();
  const Vector lam = Eigen::Map<const Vector>(spec.eigenvalues.data(), d);
  Matrix A = Q * lam.asDiagonal() * Q.transpose();
  A = 0.5 * (A + A.transpose());
  Vector z0;
  if (!spec.z0.empty()) z0 = Eigen::Map<const Vector>(spec.z0.data(), static_cast<Eigen::Index>(spec.z0.size()));
  return std::make_shared<SystemIdentification>(std::move(A), spec.noise_bound, std::move(z0), spec.tmix_factor);
}

}  // namespace plsgd
