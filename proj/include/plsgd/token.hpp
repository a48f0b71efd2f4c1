#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "plsgd/quadratic.hpp"

namespace plsgd {

/// Undirected simple graph as adjacency lists.
struct Graph {
  std::vector<std::vector<std::size_t>> adj;

  std::size_t size() const { return adj.size(); }
  std::size_t degree(std::size_t i) const { return adj.at(i).size(); }
};

/// "complete", "ring", "path", "star" or "circulant" (each node linked to
/// the `degree` nearest nodes on either side).
Graph make_graph(const std::string& kind, std::size_t n, std::size_t degree = 2);
bool is_connected(const Graph& g);

/// Metropolis-Hastings kernel with uniform-over-neighbors proposal and
/// acceptance min(1, pi_j deg_i / (pi_i deg_j)), mixed with the identity:
/// P = (1 - laziness) P_MH + laziness I. Throws DisconnectedGraph.
Matrix metropolis_hastings_kernel(const Graph& g, const Distribution& target, double laziness = 1e-3);

/// Node i holds A_i (N_i x d) and b_i (N_i).
struct TokenData {
  std::vector<Matrix> A;
  std::vector<Vector> b;
};

/// Token algorithm for least squares: the token walks the MH chain over the
/// graph and node Z_k applies grad L~(theta; Z_k) = A_i^T (A_i theta - b_i) / N_i.
/// With target pi = q (q_i = N_i / N) the objective is
/// L(theta) = ||A theta - b||^2 / (2N).
class TokenRegression : public FiniteQuadratic {
 public:
  TokenRegression(TokenData data, Graph graph, std::shared_ptr<const FiniteChain> chain);

  std::string kind() const override { return "token"; }
  nlohmann::json describe() const override;

  std::size_t nodes() const { return data_.A.size(); }
  std::size_t total_rows() const { return N_; }
  const TokenData& data() const { return data_; }
  const Graph& graph() const { return graph_; }
  /// q_i = N_i / N.
  const Distribution& weights() const { return q_; }
  const Matrix& stacked_A() const { return A_; }
  const Vector& stacked_b() const { return b_; }

  /// L~(theta; i) = ||A_i theta - b_i||^2 / (2 N_i).
  double node_loss(const Vector& theta, std::size_t i) const;
  /// ||A theta - b||^2 / (2N), evaluated from the stacked data.
  double global_loss(const Vector& theta) const;
  /// A^T (A theta - b) / N.
  Vector global_gradient(const Vector& theta) const;

  /// sigma_min(A)/N: the PL constant as printed in the application
  /// statement, kept next to the certified sigma_min(A)^2/N.
  double printed_pl_constant() const { return printed_pl_; }

 private:
  TokenData data_;
  Graph graph_;
  Distribution q_;
  std::size_t N_ = 0;
  Matrix A_;
  Vector b_;
  double printed_pl_ = 0.0;
};

struct TokenBuild {
  std::shared_ptr<TokenRegression> problem;
  std::shared_ptr<const FiniteChain> chain;
};

/// MH kernel with stationary distribution target_pi over `graph`, checked
/// against stationary() to 1e-10, and the problem on top of it.
TokenBuild token_build(TokenData data, const Graph& graph, const Distribution& target_pi, double laziness = 1e-3);

/// (1/N_i) A_i^T (A_i theta - b_i).
Vector token_grad(const TokenRegression& problem, const Vector& theta, std::size_t node);

/// mu = sigma_min^+(A)^2 / N, L = sigma_max(A)^2 / N, A = 0,
/// B = max_i 2 N sigma_max(A_i)^2 / N_i^2, C = B L*, Lg = max_i sigma_max(A_i)^2 / N_i.
/// For a target pi other than q the weights N/N_i become 1/(pi_i N_i) and the
/// objective is sum_i pi_i L~(theta; i).
ProblemConstants token_constants(const TokenRegression& problem);

struct TokenSpec {
  std::size_t nodes = 8;
  std::size_t dim = 10;
  std::vector<std::size_t> rows;  // N_i; default 12, 14, ... spread to N = 160
  std::string graph = "complete";
  std::size_t degree = 2;
  double noise = 0.5;  // target noise level; 0 gives a consistent system
  double laziness = 1e-3;
  std::uint64_t seed = 1;
};

/// Gaussian A_i and theta_true, b = A theta_true + noise * eps, pi = q.
TokenBuild make_token_problem(const TokenSpec& spec);

}  // namespace plsgd
