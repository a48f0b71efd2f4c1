#include "plsgd/quadratic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "plsgd/errors.hpp"

namespace plsgd {

namespace {

constexpr double kEigTol = 1e-12;

class QuadraticCursor : public ChainCursor {
 public:
  QuadraticCursor(const FiniteQuadratic& p, std::size_t z) : p_(p), z_(z) {}

  Vector markov_grad(const Vector& x) const override { return p_.markov_grad(x, z_); }

  NoiseSample sample(const Vector& x, Rng& rng) override {
    NoiseSample s;
    s.markov = p_.markov_grad(x, z_);
    if (p_.has_martingale()) s.martingale = uniform_in_ball(rng, x.size(), p_.martingale_radius());
    z_ = p_.finite_chain()->step(z_, rng);
    return s;
  }

  std::optional<std::size_t> state() const override { return z_; }

 private:
  const FiniteQuadratic& p_;
  std::size_t z_;
};

}  // namespace

void Problem::set_initial_point(Vector x0) {
  if (x0.size() != dim()) throw DimensionMismatch("initial point has the wrong dimension");
  x0_ = std::move(x0);
}

Vector Problem::markov_grad(const Vector&, std::size_t) const {
  throw InvalidArgument(kind() + " problem has no explicit finite chain");
}

nlohmann::json to_json(const ProblemConstants& c) {
  return {{"mu", c.mu}, {"L", c.L}, {"A", c.A}, {"B", c.B}, {"C", c.C}, {"Lg", c.Lg}};
}

MixingInfo mixing_info(const FiniteChain& chain) {
  MixingInfo info;
  try {
    info.tmix = mixing_time(chain);
    info.certified = true;
    info.method = "matrix powers with Dobrushin tail";
    return info;
  } catch (const MixingTimeNotFound&) {
  }
  const int H = default_mixing_horizon(chain);
  const Vector pi = stationary(chain).as_vector();
  const Matrix& P = chain.transition();
  std::vector<double> worst(static_cast<std::size_t>(H) + 1);
  Matrix Pk = Matrix::Identity(P.rows(), P.cols());
  for (int k = 0; k <= H; ++k) {
    double w = 0.0;
    for (Eigen::Index z = 0; z < Pk.rows(); ++z) w = std::max(w, (Pk.row(z).transpose() - pi).cwiseAbs().sum());
    worst[static_cast<std::size_t>(k)] = w;
    Pk = Pk * P;
  }
  for (int t = 1; t <= H; ++t) {
    bool ok = true;
    for (int k = t; k <= H && ok; ++k) ok = worst[static_cast<std::size_t>(k)] <= std::ldexp(1.0, -(k / t));
    if (ok) {
      info.tmix = t;
      info.certified = false;
      info.method = "matrix powers for k >= t (estimate)";
      return info;
    }
  }
  throw MixingTimeNotFound("no mixing-time estimate within the horizon");
}

FiniteQuadratic::FiniteQuadratic(std::shared_ptr<const FiniteChain> chain, std::vector<Matrix> H,
                                 std::vector<Vector> h, std::vector<double> offsets, double martingale_radius,
                                 bool allow_singular)
    : chain_(std::move(chain)),
      pi_(stationary(*chain_)),
      H_(std::move(H)),
      h_(std::move(h)),
      offsets_(std::move(offsets)),
      martingale_radius_(martingale_radius) {
  const std::size_t n = chain_->size();
  if (H_.size() != n || h_.size() != n) throw DimensionMismatch("need one (H_z, h_z) pair per chain state");
  if (offsets_.empty()) offsets_.assign(n, 0.0);
  if (offsets_.size() != n) throw DimensionMismatch("need one offset per chain state");
  if (!(martingale_radius_ >= 0.0)) throw InvalidArgument("martingale radius must be nonnegative");
  const Eigen::Index d = h_[0].size();
  Hbar_ = Matrix::Zero(d, d);
  hbar_ = Vector::Zero(d);
  for (std::size_t z = 0; z < n; ++z) {
    if (H_[z].rows() != d || H_[z].cols() != d || h_[z].size() != d) {
      throw DimensionMismatch("state " + std::to_string(z) + " has inconsistent dimensions");
    }
    if ((H_[z] - H_[z].transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, H_[z].cwiseAbs().maxCoeff())) {
      throw InvalidArgument("H_z must be symmetric");
    }
    Hbar_ += pi_[z] * H_[z];
    hbar_ += pi_[z] * h_[z];
    cbar_ += pi_[z] * offsets_[z];
  }
  Hbar_ = 0.5 * (Hbar_ + Hbar_.transpose());
  x_star_ = Hbar_.completeOrthogonalDecomposition().solve(hbar_);
  f_star_ = 0.5 * x_star_.dot(Hbar_ * x_star_) - hbar_.dot(x_star_) + cbar_;

  Eigen::SelfAdjointEigenSolver<Matrix> eig(Hbar_, Eigen::EigenvaluesOnly);
  const double mu = eig.eigenvalues().minCoeff();
  constants_.L = eig.eigenvalues().maxCoeff();
  mixing_ = mixing_info(*chain_);
  if (!(mu > kEigTol * std::max(1.0, constants_.L))) {
    if (!allow_singular) throw InvalidArgument("averaged Hessian must be positive definite");
    constants_.mu = min_positive_eigenvalue();
    constants_.A = constants_.B = constants_.C = constants_.Lg = std::numeric_limits<double>::quiet_NaN();
    return;
  }
  constants_.mu = mu;
  double lg = 0.0, offset_sq = 0.0;
  bool exact = martingale_radius_ == 0.0;
  for (std::size_t z = 0; z < n; ++z) {
    lg = std::max(lg, Eigen::SelfAdjointEigenSolver<Matrix>(H_[z], Eigen::EigenvaluesOnly).eigenvalues().cwiseAbs().maxCoeff());
    const Vector c = H_[z] * x_star_ - h_[z];
    offset_sq = std::max(offset_sq, c.squaredNorm());
    if ((H_[z] - Hbar_).cwiseAbs().maxCoeff() > 0.0 || (h_[z] - hbar_).cwiseAbs().maxCoeff() > 0.0) exact = false;
  }
  constants_.Lg = lg;
  if (exact) {
    constants_.A = 1.0;
  } else {
    const double factor = martingale_radius_ > 0.0 ? 2.0 : 1.0;
    constants_.B = factor * 4.0 * lg * lg / mu;
    constants_.C = factor * 2.0 * offset_sq + (martingale_radius_ > 0.0 ? 2.0 * martingale_radius_ * martingale_radius_ : 0.0);
  }
}

double FiniteQuadratic::objective(const Vector& x) const {
  if (x.size() != dim()) throw DimensionMismatch("objective: wrong dimension");
  return 0.5 * x.dot(Hbar_ * x) - hbar_.dot(x) + cbar_;
}

Vector FiniteQuadratic::gradient(const Vector& x) const {
  if (x.size() != dim()) throw DimensionMismatch("gradient: wrong dimension");
  return Hbar_ * x - hbar_;
}

double FiniteQuadratic::suboptimality(const Vector& x) const {
  const Vector e = x - x_star_;
  return 0.5 * e.dot(Hbar_ * e);
}

Vector FiniteQuadratic::markov_grad(const Vector& x, std::size_t z) const {
  if (z >= H_.size()) throw InvalidArgument("state out of range");
  return H_[z] * x - h_[z];
}

double FiniteQuadratic::min_positive_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(Hbar_, Eigen::EigenvaluesOnly);
  const double top = eig.eigenvalues().maxCoeff();
  double best = top;
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
    const double v = eig.eigenvalues()(i);
    if (v > 1e-10 * top) best = std::min(best, v);
  }
  return best;
}

void FiniteQuadratic::set_start_state(std::optional<std::size_t> z0) {
  if (z0 && *z0 >= chain_->size()) throw InvalidArgument("start state out of range");
  z0_ = z0;
}

std::unique_ptr<ChainCursor> FiniteQuadratic::start(Rng& rng) const {
  const std::size_t z = z0_ ? *z0_ : pi_.sample(rng);
  return std::make_unique<QuadraticCursor>(*this, z);
}

nlohmann::json FiniteQuadratic::describe() const {
  return {{"kind", kind()},
          {"dim", dim()},
          {"states", chain_->size()},
          {"martingale_radius", martingale_radius_},
          {"f_star", f_star_},
          {"tmix", mixing_.tmix},
          {"tmix_certified", mixing_.certified}};
}

}  // namespace plsgd
