#include "plsgd/subsample.hpp"

#include <algorithm>
#include <cmath>

#include "plsgd/errors.hpp"

namespace plsgd {

namespace {

void check_params(int b, double rho) {
  if (b < 1) throw InvalidArgument("b-min-sep needs b >= 1");
  if (!(rho > 0.0 && rho <= 1.0)) throw InvalidArgument("selection probability rho must lie in (0, 1]");
}

class SubsampleCursor : public ChainCursor {
 public:
  SubsampleCursor(const SubsampleRegression& p, SubsampleState s) : p_(p), s_(std::move(s)) {}

  Vector markov_grad(const Vector& w) const override { return subsample_grad(p_, w, s_); }

  NoiseSample sample(const Vector& w, Rng& rng) override {
    NoiseSample out;
    out.markov = subsample_grad(p_, w, s_);
    bminsep_step(s_, rng);
    return out;
  }

 private:
  const SubsampleRegression& p_;
  SubsampleState s_;
};

// Union bound over datapoints: the product chain's distance to stationarity
// is at most N times the single-datapoint distance.
MixingInfo estimate_mixing(std::size_t N, int b, double rho) {
  MixingInfo info;
  info.certified = false;
  info.method = "single-datapoint matrix powers, union bound over datapoints, k >= t (estimate)";
  if (b == 1) {
    info.tmix = 1;
    info.method = "i.i.d. selections";
    return info;
  }
  const Matrix P = bminsep_kernel(b, rho);
  const Vector pi = bminsep_stationary(b, rho).as_vector();
  std::vector<double> bound{2.0};
  Matrix Pk = Matrix::Identity(b, b);
  int first_half = -1;
  for (int k = 1; k <= 100000; ++k) {
    Pk = Pk * P;
    double w = 0.0;
    for (Eigen::Index z = 0; z < b; ++z) w = std::max(w, (Pk.row(z).transpose() - pi).cwiseAbs().sum());
    bound.push_back(std::min(2.0, static_cast<double>(N) * w));
    if (first_half < 0 && bound.back() <= 1.0) first_half = k;
    if (first_half > 0 && k >= std::max(64, 20 * first_half)) break;
  }
  if (first_half < 0) throw MixingTimeNotFound("b-min-sep chain does not mix within the search cap");
  const int H = static_cast<int>(bound.size()) - 1;
  for (int t = 1; t <= H; ++t) {
    bool ok = true;
    for (int k = t; k <= H && ok; ++k) ok = bound[static_cast<std::size_t>(k)] <= std::ldexp(1.0, -(k / t));
    if (ok) {
      info.tmix = t;
      return info;
    }
  }
  throw MixingTimeNotFound("no mixing-time estimate for the b-min-sep chain");
}

}  // namespace

std::size_t SubsampleState::batch_size() const {
  return static_cast<std::size_t>(std::count(selected.begin(), selected.end(), 1));
}

std::vector<std::size_t> bminsep_step(SubsampleState& state, Rng& rng) {
  check_params(state.b, state.rho);
  const std::size_t N = state.zeta.size();
  if (state.selected.size() != N) state.selected.assign(N, 0);
  std::vector<std::size_t> picked;
  for (std::size_t i = 0; i < N; ++i) {
    int& z = state.zeta[i];
    if (z < 0 || z >= state.b) throw InvalidArgument("datapoint state out of range");
    if (z == 0) {
      const bool take = bernoulli(rng, state.rho);
      state.selected[i] = take ? 1 : 0;
      if (take) {
        z = state.b - 1;
        picked.push_back(i);
      }
    } else {
      --z;
      state.selected[i] = 0;
    }
  }
  return picked;
}

Matrix bminsep_kernel(int b, double rho) {
  check_params(b, rho);
  Matrix P = Matrix::Zero(b, b);
  if (b == 1) {
    P(0, 0) = 1.0;
    return P;
  }
  P(0, 0) = 1.0 - rho;
  P(0, b - 1) = rho;
  for (int s = 1; s < b; ++s) P(s, s - 1) = 1.0;
  return P;
}

Distribution bminsep_stationary(int b, double rho) {
  check_params(b, rho);
  const double denom = 1.0 + (b - 1) * rho;
  std::vector<double> w(static_cast<std::size_t>(b), rho / denom);
  w[0] = 1.0 / denom;
  return Distribution::normalized(Eigen::Map<const Vector>(w.data(), b));
}

double bminsep_selection_probability(int b, double rho) {
  check_params(b, rho);
  return rho / (1.0 + (b - 1) * rho);
}

SubsampleRegression::SubsampleRegression(Matrix features, Vector targets, int b, double rho)
    : features_(std::move(features)), targets_(std::move(targets)), b_(b), rho_(rho) {
  check_params(b, rho);
  if (features_.rows() == 0 || features_.cols() == 0) throw InvalidArgument("subsample model needs data");
  if (features_.rows() != targets_.size()) throw DimensionMismatch("features and targets differ in length");
  const double N = static_cast<double>(features_.rows());
  const double p = bminsep_selection_probability(b, rho);
  scale_ = 1.0 - std::pow(1.0 - p, N);

  gram_ = features_.transpose() * features_ / N;
  w_star_ = features_.completeOrthogonalDecomposition().solve(targets_);
  loss_star_ = loss(w_star_);
  example_L_ = features_.rowwise().squaredNorm().maxCoeff();
  const Matrix kernel = features_ * features_.transpose();
  kernel_min_ = Eigen::SelfAdjointEigenSolver<Matrix>(kernel, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  constants_ = subsample_constants(*this);
  mixing_ = estimate_mixing(size(), b_, rho_);
}

double SubsampleRegression::loss(const Vector& w) const {
  return (features_ * w - targets_).squaredNorm() / (2.0 * static_cast<double>(features_.rows()));
}

Vector SubsampleRegression::loss_gradient(const Vector& w) const {
  return features_.transpose() * (features_ * w - targets_) / static_cast<double>(features_.rows());
}

double SubsampleRegression::suboptimality(const Vector& w) const {
  const Vector e = w - w_star_;
  return scale_ * 0.5 * e.dot(gram_ * e);
}

SubsampleState SubsampleRegression::stationary_state(Rng& rng) const {
  SubsampleState s;
  s.b = b_;
  s.rho = rho_;
  const Distribution pi = bminsep_stationary(b_, rho_);
  s.zeta.resize(size());
  s.selected.assign(size(), 0);
  for (std::size_t i = 0; i < size(); ++i) {
    s.zeta[i] = static_cast<int>(pi.sample(rng));
    s.selected[i] = b_ == 1 ? (bernoulli(rng, rho_) ? 1 : 0) : (s.zeta[i] == b_ - 1 ? 1 : 0);
  }
  return s;
}

std::unique_ptr<ChainCursor> SubsampleRegression::start(Rng& rng) const {
  return std::make_unique<SubsampleCursor>(*this, stationary_state(rng));
}

nlohmann::json SubsampleRegression::describe() const {
  return {{"kind", kind()},
          {"dim", dim()},
          {"N", size()},
          {"b", b_},
          {"rho", rho_},
          {"mean_scale", scale_},
          {"loss_star", loss_star_},
          {"f_star", f_star()},
          {"example_smoothness", example_L_},
          {"tangent_kernel_min", kernel_min_},
          {"tmix", mixing_.tmix},
          {"tmix_certified", mixing_.certified}};
}

Vector subsample_grad(const SubsampleRegression& model, const Vector& w, const SubsampleState& state) {
  if (state.selected.size() != model.size()) throw DimensionMismatch("state size differs from dataset size");
  if (w.size() != model.dim()) throw DimensionMismatch("parameter has the wrong dimension");
  Vector g = Vector::Zero(model.dim());
  std::size_t count = 0;
  for (std::size_t i = 0; i < model.size(); ++i) {
    if (!state.selected[i]) continue;
    const auto r = static_cast<Eigen::Index>(i);
    g += (model.features().row(r).dot(w) - model.targets()(r)) * model.features().row(r).transpose();
    ++count;
  }
  if (count == 0) return g;
  return g / static_cast<double>(count);
}

ProblemConstants subsample_constants(const SubsampleRegression& model) {
  const double N = static_cast<double>(model.size());
  const double c = model.mean_scale();
  const Matrix gram = model.features().transpose() * model.features() / N;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  const double top = ev.maxCoeff();
  double low = top;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i) > 1e-10 * top) low = std::min(low, ev(i));
  ProblemConstants k;
  k.mu = c * low;
  k.L = c * top;
  k.A = 0.0;
  k.B = 2.0 * N * model.example_smoothness() / c;
  k.C = k.B * c * std::max(model.loss_star(), 0.0);
  k.Lg = model.example_smoothness();
  return k;
}

std::shared_ptr<SubsampleRegression> make_subsample_problem(const SubsampleSpec& spec) {
  if (spec.N == 0 || spec.dim == 0) throw InvalidArgument("subsample problem needs N >= 1 and dim >= 1");
  Rng rng = make_rng(spec.seed, 0x73756273);
  const auto N = static_cast<Eigen::Index>(spec.N);
  const auto d = static_cast<Eigen::Index>(spec.dim);
  Matrix A(N, d);
  for (Eigen::Index i = 0; i < N; ++i)
    for (Eigen::Index j = 0; j < d; ++j) A(i, j) = standard_normal(rng);
  const Vector w_true = normal_vector(rng, d);
  Vector y = A * w_true;
  for (Eigen::Index i = 0; i < N; ++i) y(i) += spec.noise * standard_normal(rng);
  return std::make_shared<SubsampleRegression>(std::move(A), std::move(y), spec.b, spec.rho);
}

}  // namespace plsgd
