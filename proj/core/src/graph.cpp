#include "scone/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <map>

#include "scone/error.hpp"

namespace scone {

KnnGraph::KnnGraph(std::size_t n, std::size_t k, std::span<const std::uint32_t> flat_neighbors)
    : n_(n), k_(k), neighbors_(flat_neighbors.begin(), flat_neighbors.end()) {
  if (flat_neighbors.size() != n * k) {
    throw ParameterError("KnnGraph: expected " + std::to_string(n * k) + " neighbour entries, got " +
                         std::to_string(flat_neighbors.size()));
  }
  if (k == 0 || (n > 0 && k >= n)) throw ParameterError("KnnGraph: need 1 <= k < n");
  std::vector<std::uint32_t> sorted(k);
  for (std::size_t i = 0; i < n; ++i) {
    auto list = neighbors(i);
    sorted.assign(list.begin(), list.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw ParameterError("KnnGraph: duplicate neighbour of node " + std::to_string(i));
    }
    for (std::uint32_t j : list) {
      if (j >= n) throw ParameterError("KnnGraph: neighbour index out of range");
      if (j == i) throw ParameterError("KnnGraph: node " + std::to_string(i) + " lists itself");
    }
  }
}

KnnGraph build_knn(const Matrix& x, std::size_t k, Metric metric) {
  (void)metric;  // euclidean is the only metric
  const std::size_t n = x.rows();
  if (k == 0) throw ParameterError("build_knn: k must be at least 1");
  if (n <= k) {
    throw ParameterError("build_knn: need more than k=" + std::to_string(k) + " rows, got " +
                         std::to_string(n));
  }
  if (!x.all_finite()) throw DomainError("build_knn: input contains non-finite values");

  const std::size_t d = x.cols();
  tracked_vector<std::uint32_t> flat(n * k);
  tracked_vector<std::pair<double, std::uint32_t>> cand(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = x.row(i).data();
    std::size_t c = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double* xj = x.row(j).data();
      double dist = 0.0;
      for (std::size_t f = 0; f < d; ++f) {
        const double diff = xi[f] - xj[f];
        dist += diff * diff;
      }
      cand[c++] = {dist, static_cast<std::uint32_t>(j)};
    }
    // pair ordering gives (distance, index) lexicographic tie-breaking
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
    for (std::size_t r = 0; r < k; ++r) flat[i * k + r] = cand[r].second;
  }
  return KnnGraph(n, k, {flat.data(), flat.size()});
}

std::vector<double> neighborhood_average(const Matrix& z, const KnnGraph& g, std::size_t i) {
  if (z.rows() != g.node_count()) {
    throw DimensionError("neighborhood_average: " + std::to_string(z.rows()) +
                         " latent rows for a graph of " + std::to_string(g.node_count()));
  }
  if (i >= g.node_count()) throw ParameterError("neighborhood_average: node out of range");
  std::vector<double> out(z.cols(), 0.0);
  for (std::uint32_t j : g.neighbors(i)) {
    auto row = z.row(j);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += row[c];
  }
  const double inv = 1.0 / static_cast<double>(g.k());
  for (double& v : out) v *= inv;
  return out;
}

Matrix neighborhood_averages(const Matrix& z, const KnnGraph& g) {
  if (z.rows() != g.node_count()) {
    throw DimensionError("neighborhood_averages: " + std::to_string(z.rows()) +
                         " latent rows for a graph of " + std::to_string(g.node_count()));
  }
  Matrix out(z.rows(), z.cols());
  const double inv = 1.0 / static_cast<double>(g.k());
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    auto dst = out.row(i);
    for (std::uint32_t j : g.neighbors(i)) {
      auto src = z.row(j);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
    }
    for (double& v : dst) v *= inv;
  }
  return out;
}

namespace ad {
Var neighbor_mean(Var z, const KnnGraph& g) {
  Tape& t = *z.tape;
  return t.record(neighborhood_averages(z.value(), g), {z}, [z, &g](Tape& t, const Matrix& grad) {
    const Matrix& zv = t.value(z);
    Matrix gz(zv.rows(), zv.cols());
    const double inv = 1.0 / static_cast<double>(g.k());
    for (std::size_t i = 0; i < g.node_count(); ++i) {
      auto src = grad.row(i);
      for (std::uint32_t j : g.neighbors(i)) {
        auto dst = gz.row(j);
        for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += inv * src[c];
      }
    }
    t.accumulate(z, std::move(gz));
  });
}
}  // namespace ad

void UndirectedWeightedGraph::add_edge(std::size_t u, std::size_t v, double weight) {
  if (u >= adjacency_.size() || v >= adjacency_.size()) {
    throw ParameterError("add_edge: node out of range");
  }
  if (u == v) throw ParameterError("add_edge: self-loops are not allowed");
  if (!(weight >= 0.0)) throw ParameterError("add_edge: weights must be non-negative");
  auto bump = [&](std::size_t a, std::size_t b) {
    for (Edge& e : adjacency_[a]) {
      if (e.to == b) {
        e.weight += weight;
        return;
      }
    }
    adjacency_[a].push_back({static_cast<std::uint32_t>(b), weight});
  };
  bump(u, v);
  bump(v, u);
  total_weight_ += 2.0 * weight;
}

double UndirectedWeightedGraph::degree(std::size_t u) const noexcept {
  double d = 0.0;
  for (const Edge& e : adjacency_[u]) d += e.weight;
  return d;
}

std::size_t UndirectedWeightedGraph::edge_count() const noexcept {
  std::size_t c = 0;
  for (const auto& list : adjacency_) c += list.size();
  return c / 2;
}

UndirectedWeightedGraph symmetrize(const KnnGraph& g) {
  const std::size_t n = g.node_count();
  std::vector<std::vector<std::uint32_t>> adj(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::uint32_t j : g.neighbors(i)) {
      adj[i].push_back(j);
      adj[j].push_back(static_cast<std::uint32_t>(i));
    }
  }
  UndirectedWeightedGraph out(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& list = adj[i];
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
    for (std::uint32_t j : list) {
      if (j > i) out.add_edge(i, j, 1.0);
    }
  }
  return out;
}

double modularity(const UndirectedWeightedGraph& g, std::span<const std::uint32_t> partition,
                  double resolution) {
  if (!(resolution > 0.0)) throw ParameterError("modularity: resolution must be positive");
  if (partition.size() != g.node_count()) {
    throw ParameterError("modularity: partition covers " + std::to_string(partition.size()) +
                         " of " + std::to_string(g.node_count()) + " nodes");
  }
  const double two_m = g.total_weight();
  if (!(two_m > 0.0)) throw UndefinedError("modularity: graph has no edges");

  std::map<std::uint32_t, double> community_degree;
  double internal = 0.0;  // sum_ij A_ij delta(c_i, c_j), both orientations
  for (std::size_t u = 0; u < g.node_count(); ++u) {
    double deg = 0.0;
    for (const auto& e : g.edges(u)) {
      deg += e.weight;
      if (partition[e.to] == partition[u]) internal += e.weight;
    }
    community_degree[partition[u]] += deg;
  }
  double expected = 0.0;
  for (const auto& [c, tot] : community_degree) expected += tot * tot;
  return internal / two_m - resolution * expected / (two_m * two_m);
}

}  // namespace scone
