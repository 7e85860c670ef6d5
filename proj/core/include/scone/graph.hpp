#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "scone/matrix.hpp"
#include "scone/tape.hpp"

namespace scone {

// Directed k-nearest-neighbour graph. neighbors(i) lists the k nodes j that
// feed into i (j in N(i)), closest first.
class KnnGraph {
 public:
  KnnGraph() = default;
  // Validates: every list has exactly k distinct entries < n, none equal to
  // its own node. Throws ParameterError otherwise.
  KnnGraph(std::size_t n, std::size_t k, std::span<const std::uint32_t> flat_neighbors);

  std::size_t node_count() const noexcept { return n_; }
  std::size_t k() const noexcept { return k_; }
  std::size_t edge_count() const noexcept { return n_ * k_; }
  std::span<const std::uint32_t> neighbors(std::size_t i) const noexcept {
    return {neighbors_.data() + i * k_, k_};
  }

  friend bool operator==(const KnnGraph& a, const KnnGraph& b) noexcept {
    return a.n_ == b.n_ && a.k_ == b.k_ && a.neighbors_ == b.neighbors_;
  }

 private:
  std::size_t n_ = 0;
  std::size_t k_ = 0;
  tracked_vector<std::uint32_t> neighbors_;
};

enum class Metric { euclidean };

// Exact brute-force KNN over the rows of x, excluding self, ties broken by
// the lower index. Throws ParameterError when x.rows() <= k or k == 0, and
// DomainError on NaN input.
KnnGraph build_knn(const Matrix& x, std::size_t k, Metric metric = Metric::euclidean);

// Mean of the rows of z indexed by N(i).
std::vector<double> neighborhood_average(const Matrix& z, const KnnGraph& g, std::size_t i);

// All neighbourhood averages at once: row i is neighborhood_average(z, g, i).
Matrix neighborhood_averages(const Matrix& z, const KnnGraph& g);

namespace ad {
// Differentiable form of neighborhood_averages. g must outlive the tape.
Var neighbor_mean(Var z, const KnnGraph& g);
}  // namespace ad

// Symmetric weighted graph without self-loops, stored as adjacency lists.
class UndirectedWeightedGraph {
 public:
  struct Edge {
    std::uint32_t to;
    double weight;
  };

  explicit UndirectedWeightedGraph(std::size_t n = 0) : adjacency_(n) {}

  // Adds weight to {u, v}; repeated calls on the same pair accumulate.
  void add_edge(std::size_t u, std::size_t v, double weight = 1.0);

  std::size_t node_count() const noexcept { return adjacency_.size(); }
  std::span<const Edge> edges(std::size_t u) const noexcept { return adjacency_[u]; }
  double degree(std::size_t u) const noexcept;
  // 2m: the sum of all degrees.
  double total_weight() const noexcept { return total_weight_; }
  std::size_t edge_count() const noexcept;

 private:
  std::vector<std::vector<Edge>> adjacency_;
  double total_weight_ = 0.0;
};

// Union of directed edges as unit-weight undirected edges.
UndirectedWeightedGraph symmetrize(const KnnGraph& g);

// Newman modularity with resolution gamma:
//   Q = 1/(2m) sum_ij [A_ij - gamma k_i k_j / (2m)] delta(c_i, c_j)
// Throws UndefinedError on a graph without edges and ParameterError on a
// non-positive resolution or a partition of the wrong length.
double modularity(const UndirectedWeightedGraph& g, std::span<const std::uint32_t> partition,
                  double resolution = 1.0);

}  // namespace scone
