#include "plsgd/chain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "plsgd/errors.hpp"

namespace plsgd {

namespace {

constexpr double kMassTol = 1e-12;
constexpr double kKernelTol = 1e-10;

double worst_row_tv(const Matrix& Pk, const Vector& pi) {
  double worst = 0.0;
  for (Eigen::Index z = 0; z < Pk.rows(); ++z) {
    worst = std::max(worst, (Pk.row(z).transpose() - pi).cwiseAbs().sum());
  }
  return worst;
}

// (1/2) max_{z,z'} ||Pk(z,.) - Pk(z',.)||_TV
double dobrushin(const Matrix& Pk) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < Pk.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < Pk.rows(); ++j) {
      worst = std::max(worst, (Pk.row(i) - Pk.row(j)).cwiseAbs().sum());
    }
  }
  return 0.5 * worst;
}

Matrix matrix_power(const Matrix& P, int k) {
  Matrix result = Matrix::Identity(P.rows(), P.cols());
  Matrix base = P;
  while (k > 0) {
    if (k & 1) result = result * base;
    k >>= 1;
    if (k > 0) base = base * base;
  }
  return result;
}

}  // namespace

// ---------------------------------------------------------------- Distribution

Distribution::Distribution(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) throw InvalidArgument("distribution must have at least one state");
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("distribution weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > kMassTol) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "distribution weights sum to " << total << ", expected 1";
    throw InvalidArgument(msg.str());
  }
}

Distribution Distribution::point_mass(std::size_t n, std::size_t state) {
  if (state >= n) throw InvalidArgument("point mass state out of range");
  std::vector<double> w(n, 0.0);
  w[state] = 1.0;
  return Distribution(std::move(w));
}

Distribution Distribution::uniform(std::size_t n) {
  if (n == 0) throw InvalidArgument("uniform distribution over zero states");
  return Distribution(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

Distribution Distribution::normalized(const Vector& weights) {
  std::vector<double> w(static_cast<std::size_t>(weights.size()));
  double total = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    w[static_cast<std::size_t>(i)] = std::max(0.0, weights(i));
    total += w[static_cast<std::size_t>(i)];
  }
  if (!(total > 0.0) || !std::isfinite(total)) throw InvalidArgument("cannot normalize a zero or non-finite vector");
  for (double& x : w) x /= total;
  // One more pass so the stored sum is as close to 1 as rounding allows.
  double again = 0.0;
  for (double x : w) again += x;
  for (double& x : w) x /= again;
  return Distribution(std::move(w));
}

Vector Distribution::as_vector() const {
  return Eigen::Map<const Vector>(weights_.data(), static_cast<Eigen::Index>(weights_.size()));
}

std::size_t Distribution::sample(Rng& rng) const {
  const double u = uniform01(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    acc += weights_[i];
    if (u < acc) return i;
  }
  // u landed in the rounding gap above the last partial sum.
  for (std::size_t i = weights_.size(); i-- > 0;) {
    if (weights_[i] > 0.0) return i;
  }
  return weights_.size() - 1;
}

// ----------------------------------------------------------------- FiniteChain

FiniteChain::FiniteChain(Matrix transition, std::vector<std::string> labels)
    : transition_(std::move(transition)), labels_(std::move(labels)) {
  const Eigen::Index n = transition_.rows();
  if (n < 1) throw InvalidArgument("chain needs at least one state");
  if (transition_.cols() != n) throw InvalidArgument("transition matrix must be square");
  if (!labels_.empty() && labels_.size() != static_cast<std::size_t>(n)) {
    throw InvalidArgument("label count does not match state count");
  }
  cumulative_.assign(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n)));
  for (Eigen::Index i = 0; i < n; ++i) {
    double total = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double p = transition_(i, j);
      if (!(p >= 0.0 && p <= 1.0)) {
        throw InvalidArgument("transition entry (" + std::to_string(i) + "," + std::to_string(j) +
                              ") outside [0,1]");
      }
      total += p;
      cumulative_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = total;
    }
    if (std::abs(total - 1.0) > kMassTol) {
      throw InvalidArgument("row " + std::to_string(i) + " of the transition matrix does not sum to 1");
    }
  }
}

FiniteChain FiniteChain::parse(std::istream& in) {
  long long n = 0;
  if (!(in >> n) || n < 1) throw InvalidArgument("chain file: expected a positive state count");
  Matrix P(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!(in >> P(i, j))) throw InvalidArgument("chain file: truncated matrix");
    }
  }
  return FiniteChain(std::move(P));
}

FiniteChain FiniteChain::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open " + path.string());
  return parse(in);
}

void FiniteChain::write(std::ostream& out) const {
  const auto old = out.precision(17);
  out << size() << '\n';
  for (Eigen::Index i = 0; i < transition_.rows(); ++i) {
    for (Eigen::Index j = 0; j < transition_.cols(); ++j) {
      if (j > 0) out << ' ';
      out << transition_(i, j);
    }
    out << '\n';
  }
  out.precision(old);
}

std::size_t FiniteChain::step(std::size_t from, Rng& rng) const {
  const auto& cum = cumulative_.at(from);
  const double u = uniform01(rng) * cum.back();
  auto it = std::upper_bound(cum.begin(), cum.end(), u);
  std::size_t j = static_cast<std::size_t>(it - cum.begin());
  if (j >= cum.size()) j = cum.size() - 1;
  // Never land on a zero-probability state through a rounding tie.
  while (j > 0 && (*this)(from, j) == 0.0) --j;
  return j;
}

// ------------------------------------------------------------------ operations

Distribution stationary(const FiniteChain& chain) {
  const Eigen::Index n = static_cast<Eigen::Index>(chain.size());
  if (n == 1) return Distribution({1.0});
  const Matrix& P = chain.transition();
  Matrix M = P.transpose() - Matrix::Identity(n, n);

  Eigen::FullPivLU<Matrix> lu(M);
  lu.setThreshold(kKernelTol);
  if (lu.dimensionOfKernel() > 1) {
    throw NonUniqueStationary("unit eigenspace has dimension " + std::to_string(lu.dimensionOfKernel()));
  }

  // Replace the last balance equation with the normalization sum(pi) = 1.
  Matrix S = M;
  S.row(n - 1).setOnes();
  Vector rhs = Vector::Zero(n);
  rhs(n - 1) = 1.0;
  Vector pi = S.fullPivLu().solve(rhs);

  auto residual = [&](const Vector& v) { return (P.transpose() * v - v).cwiseAbs().maxCoeff(); };
  if (!pi.allFinite() || residual(pi) > kKernelTol || pi.minCoeff() < -kKernelTol) {
    pi = Vector::Constant(n, 1.0 / static_cast<double>(n));
    for (int it = 0; it < 1000000 && residual(pi) > 1e-14; ++it) {
      pi = 0.5 * (pi + P.transpose() * pi);  // lazy step avoids periodic oscillation
      pi /= pi.sum();
    }
  }
  Distribution out = Distribution::normalized(pi);
  Vector v = out.as_vector();
  if (residual(v) > kKernelTol) {
    throw NonUniqueStationary("stationary solve did not converge (residual " + std::to_string(residual(v)) + ")");
  }
  return out;
}

double tv_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw DimensionMismatch("tv_distance: lengths differ");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return s;
}

double tv_distance(const Distribution& p, const Distribution& q) { return tv_distance(p.weights(), q.weights()); }

int default_mixing_horizon(const FiniteChain& chain, int search_cap) {
  const Vector pi = stationary(chain).as_vector();
  const Matrix& P = chain.transition();
  Matrix Pk = P;
  for (int k = 1; k <= search_cap; ++k) {
    if (0.5 * worst_row_tv(Pk, pi) <= 0.5) return std::max(64, 20 * k);
    Pk = Pk * P;
  }
  throw MixingTimeNotFound("worst-case distance to stationarity never dropped to 1/2 within " +
                           std::to_string(search_cap) + " steps");
}

MixingCertificate certify_mixing(const FiniteChain& chain, std::optional<int> horizon) {
  const int H = horizon ? *horizon : default_mixing_horizon(chain);
  if (H < 1) throw InvalidArgument("mixing horizon must be positive");
  const Vector pi = stationary(chain).as_vector();
  const Matrix& P = chain.transition();

  MixingCertificate cert;
  cert.horizon = H;
  cert.worst_tv.resize(static_cast<std::size_t>(H) + 1);
  Matrix Pk = Matrix::Identity(P.rows(), P.cols());
  for (int k = 0; k <= H; ++k) {
    cert.worst_tv[static_cast<std::size_t>(k)] = worst_row_tv(Pk, pi);
    if (k < H) Pk = Pk * P;
  }

  // A candidate t certifies k <= H directly; Dobrushin contraction
  // D(k) <= dbar(t) D(k - t) with dbar(t) <= 1/2 carries it past H.
  for (int t = 1; t <= H; ++t) {
    bool ok = true;
    for (int k = 1; k <= H && ok; ++k) {
      ok = cert.worst_tv[static_cast<std::size_t>(k)] <= std::ldexp(1.0, -(k / t));
    }
    if (!ok) continue;
    const double dbar = dobrushin(matrix_power(P, t));
    if (dbar > 0.5) continue;
    cert.tmix = t;
    cert.dobrushin_at_tmix = dbar;
    return cert;
  }
  throw MixingTimeNotFound("no mixing time t <= " + std::to_string(H) + " certifies the chain");
}

int mixing_time(const FiniteChain& chain, std::optional<int> horizon) { return certify_mixing(chain, horizon).tmix; }

std::vector<std::size_t> sample_path(const FiniteChain& chain, const Distribution& start, std::size_t length,
                                     std::uint64_t seed) {
  if (start.size() != chain.size()) throw DimensionMismatch("start distribution size differs from chain");
  std::vector<std::size_t> path;
  path.reserve(length);
  if (length == 0) return path;
  Rng rng = make_rng(seed);
  path.push_back(start.sample(rng));
  while (path.size() < length) path.push_back(chain.step(path.back(), rng));
  return path;
}

Matrix fundamental_matrix(const FiniteChain& chain, const Distribution& pi) {
  const Eigen::Index n = static_cast<Eigen::Index>(chain.size());
  if (pi.size() != chain.size()) throw DimensionMismatch("stationary vector size differs from chain");
  Matrix M = Matrix::Identity(n, n) - chain.transition() + Vector::Ones(n) * pi.as_vector().transpose();
  Eigen::FullPivLU<Matrix> lu(M);
  if (!lu.isInvertible()) throw SingularSystem("I - P + 1 pi^T is singular");
  Matrix F = lu.inverse();
  if (!F.allFinite()) throw SingularSystem("fundamental matrix is not finite");
  return F;
}

Matrix fundamental_matrix(const FiniteChain& chain) { return fundamental_matrix(chain, stationary(chain)); }

}  // namespace plsgd
