#include "plsgd/token.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include "plsgd/errors.hpp"

namespace plsgd {

namespace {

double spectral_norm(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(M);
  return svd.singularValues()(0);
}

void link(Graph& g, std::size_t i, std::size_t j) {
  if (i == j) return;
  auto& a = g.adj[i];
  if (std::find(a.begin(), a.end(), j) != a.end()) return;
  a.push_back(j);
  g.adj[j].push_back(i);
}

}  // namespace

Graph make_graph(const std::string& kind, std::size_t n, std::size_t degree) {
  if (n == 0) throw InvalidArgument("graph needs at least one node");
  Graph g;
  g.adj.resize(n);
  if (kind == "complete") {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) link(g, i, j);
  } else if (kind == "ring") {
    for (std::size_t i = 0; i < n; ++i) link(g, i, (i + 1) % n);
  } else if (kind == "path") {
    for (std::size_t i = 0; i + 1 < n; ++i) link(g, i, i + 1);
  } else if (kind == "star") {
    for (std::size_t i = 1; i < n; ++i) link(g, 0, i);
  } else if (kind == "circulant") {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t s = 1; s <= degree; ++s) link(g, i, (i + s) % n);
  } else {
    throw InvalidArgument("unknown graph kind '" + kind + "'");
  }
  for (auto& a : g.adj) std::sort(a.begin(), a.end());
  return g;
}

bool is_connected(const Graph& g) {
  if (g.size() == 0) return false;
  std::vector<char> seen(g.size(), 0);
  std::queue<std::size_t> todo;
  todo.push(0);
  seen[0] = 1;
  std::size_t count = 1;
  while (!todo.empty()) {
    const std::size_t i = todo.front();
    todo.pop();
    for (std::size_t j : g.adj[i]) {
      if (j >= g.size()) throw InvalidArgument("graph edge points outside the node range");
      if (!seen[j]) {
        seen[j] = 1;
        ++count;
        todo.push(j);
      }
    }
  }
  return count == g.size();
}

Matrix metropolis_hastings_kernel(const Graph& g, const Distribution& target, double laziness) {
  const std::size_t n = g.size();
  if (target.size() != n) throw DimensionMismatch("target distribution size differs from node count");
  if (!(laziness >= 0.0 && laziness < 1.0)) throw InvalidArgument("laziness must lie in [0, 1)");
  if (!is_connected(g)) throw DisconnectedGraph("token graph is not connected");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(target[i] > 0.0)) throw InvalidArgument("target distribution must be strictly positive");
  }
  Matrix P = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double di = static_cast<double>(g.degree(i));
    double moved = 0.0;
    for (std::size_t j : g.adj[i]) {
      const double dj = static_cast<double>(g.degree(j));
      const double accept = std::min(1.0, (target[j] * di) / (target[i] * dj));
      const double p = accept / di;
      P(ii, static_cast<Eigen::Index>(j)) = p;
      moved += p;
    }
    P(ii, ii) = std::max(0.0, 1.0 - moved);
  }
  P = (1.0 - laziness) * P + laziness * Matrix::Identity(P.rows(), P.cols());
  // Absorb the rounding error of each row into its diagonal.
  for (Eigen::Index i = 0; i < P.rows(); ++i) P(i, i) += 1.0 - P.row(i).sum();
  return P;
}

TokenRegression::TokenRegression(TokenData data, Graph graph, std::shared_ptr<const FiniteChain> chain)
    : FiniteQuadratic(
          chain,
          [&] {
            std::vector<Matrix> H;
            for (const Matrix& Ai : data.A) H.push_back(Ai.transpose() * Ai / static_cast<double>(Ai.rows()));
            return H;
          }(),
          [&] {
            std::vector<Vector> h;
            for (std::size_t i = 0; i < data.A.size(); ++i)
              h.push_back(data.A[i].transpose() * data.b.at(i) / static_cast<double>(data.A[i].rows()));
            return h;
          }(),
          [&] {
            std::vector<double> c;
            for (std::size_t i = 0; i < data.A.size(); ++i)
              c.push_back(data.b.at(i).squaredNorm() / (2.0 * static_cast<double>(data.A[i].rows())));
            return c;
          }(),
          0.0, true),
      data_(std::move(data)),
      graph_(std::move(graph)),
      q_(Distribution::uniform(1)) {
  const std::size_t M = data_.A.size();
  if (graph_.size() != M) throw DimensionMismatch("graph size differs from node count");
  std::vector<double> rows(M);
  for (std::size_t i = 0; i < M; ++i) {
    if (data_.A[i].rows() != data_.b[i].size()) throw DimensionMismatch("A_i and b_i row counts differ");
    if (data_.A[i].rows() == 0) throw InvalidArgument("every node needs at least one row");
    rows[i] = static_cast<double>(data_.A[i].rows());
    N_ += static_cast<std::size_t>(data_.A[i].rows());
  }
  for (double& r : rows) r /= static_cast<double>(N_);
  q_ = Distribution::normalized(Eigen::Map<const Vector>(rows.data(), static_cast<Eigen::Index>(M)));

  A_.resize(static_cast<Eigen::Index>(N_), dim());
  b_.resize(static_cast<Eigen::Index>(N_));
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < M; ++i) {
    A_.middleRows(r, data_.A[i].rows()) = data_.A[i];
    b_.segment(r, data_.b[i].size()) = data_.b[i];
    r += data_.A[i].rows();
  }
  if (A_.cwiseAbs().maxCoeff() == 0.0) throw InvalidArgument("data matrix A must be nonzero");

  double f = 0.0;
  for (std::size_t i = 0; i < M; ++i) f += pi_[i] * node_loss(x_star_, i);
  f_star_ = f;

  Eigen::JacobiSVD<Matrix> svd(A_);
  const auto& s = svd.singularValues();
  double smin = s(0);
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > 1e-10 * s(0)) smin = std::min(smin, s(i));
  printed_pl_ = smin / static_cast<double>(N_);
  set_constants(token_constants(*this));
}

double TokenRegression::node_loss(const Vector& theta, std::size_t i) const {
  const Matrix& Ai = data_.A.at(i);
  return (Ai * theta - data_.b[i]).squaredNorm() / (2.0 * static_cast<double>(Ai.rows()));
}

double TokenRegression::global_loss(const Vector& theta) const {
  return (A_ * theta - b_).squaredNorm() / (2.0 * static_cast<double>(N_));
}

Vector TokenRegression::global_gradient(const Vector& theta) const {
  return A_.transpose() * (A_ * theta - b_) / static_cast<double>(N_);
}

nlohmann::json TokenRegression::describe() const {
  nlohmann::json j = FiniteQuadratic::describe();
  j["kind"] = kind();
  j["nodes"] = nodes();
  j["total_rows"] = N_;
  std::vector<long long> rows;
  for (const Matrix& Ai : data_.A) rows.push_back(static_cast<long long>(Ai.rows()));
  j["rows_per_node"] = rows;
  j["printed_pl_constant"] = printed_pl_;
  return j;
}

TokenBuild token_build(TokenData data, const Graph& graph, const Distribution& target_pi, double laziness) {
  if (data.A.size() != graph.size()) throw DimensionMismatch("graph size differs from node count");
  auto chain = std::make_shared<const FiniteChain>(metropolis_hastings_kernel(graph, target_pi, laziness));
  const Distribution pi = stationary(*chain);
  for (std::size_t i = 0; i < pi.size(); ++i) {
    if (std::abs(pi[i] - target_pi[i]) > 1e-10) {
      throw InvalidArgument("Metropolis-Hastings kernel missed the target distribution");
    }
  }
  TokenBuild out;
  out.chain = chain;
  out.problem = std::make_shared<TokenRegression>(std::move(data), graph, chain);
  return out;
}

Vector token_grad(const TokenRegression& problem, const Vector& theta, std::size_t node) {
  if (node >= problem.nodes()) throw InvalidArgument("token node out of range");
  return problem.markov_grad(theta, node);
}

ProblemConstants token_constants(const TokenRegression& problem) {
  ProblemConstants c;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(problem.hessian(), Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  const double top = ev.maxCoeff();
  double low = top;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i) > 1e-10 * top) low = std::min(low, ev(i));
  c.mu = low;
  c.L = top;
  c.A = 0.0;
  double B = 0.0, Lg = 0.0;
  for (std::size_t i = 0; i < problem.nodes(); ++i) {
    const Matrix& Ai = problem.data().A[i];
    const double Ni = static_cast<double>(Ai.rows());
    const double s2 = std::pow(spectral_norm(Ai), 2);
    B = std::max(B, 2.0 * s2 / (Ni * problem.pi()[i]));
    Lg = std::max(Lg, s2 / Ni);
  }
  c.B = B;
  c.C = B * std::max(problem.f_star(), 0.0);
  c.Lg = Lg;
  return c;
}

TokenBuild make_token_problem(const TokenSpec& spec) {
  if (spec.nodes == 0 || spec.dim == 0) throw InvalidArgument("token problem needs nodes >= 1 and dim >= 1");
  std::vector<std::size_t> rows = spec.rows;
  if (rows.empty()) {
    if (spec.nodes == 8) {
      rows = {12, 14, 16, 18, 22, 24, 26, 28};
    } else {
      rows.assign(spec.nodes, 20);
    }
  }
  if (rows.size() != spec.nodes) throw InvalidArgument("rows must list one count per node");
  Rng rng = make_rng(spec.seed, 0x746f6b656e);
  const auto d = static_cast<Eigen::Index>(spec.dim);
  const Vector theta_true = normal_vector(rng, d);
  TokenData data;
  for (std::size_t i = 0; i < spec.nodes; ++i) {
    const auto Ni = static_cast<Eigen::Index>(rows[i]);
    if (Ni == 0) throw InvalidArgument("every node needs at least one row");
    Matrix Ai(Ni, d);
    for (Eigen::Index r = 0; r < Ni; ++r)
      for (Eigen::Index c = 0; c < d; ++c) Ai(r, c) = standard_normal(rng);
    Vector bi = Ai * theta_true;
    for (Eigen::Index r = 0; r < Ni; ++r) bi(r) += spec.noise * standard_normal(rng);
    data.A.push_back(std::move(Ai));
    data.b.push_back(std::move(bi));
  }
  const double N = static_cast<double>(std::accumulate(rows.begin(), rows.end(), std::size_t{0}));
  Vector q(static_cast<Eigen::Index>(spec.nodes));
  for (std::size_t i = 0; i < spec.nodes; ++i) q(static_cast<Eigen::Index>(i)) = static_cast<double>(rows[i]) / N;
  const Graph g = make_graph(spec.graph, spec.nodes, spec.degree);
  return token_build(std::move(data), g, Distribution::normalized(q), spec.laziness);
}

}  // namespace plsgd
