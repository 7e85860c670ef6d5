#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "scone/error.hpp"
#include "scone/graph.hpp"
#include "test_support.hpp"

using namespace scone;
using scone::testing::random_matrix;

namespace {

// Sort every other row by (squared distance, index) and keep the first k.
std::vector<std::uint32_t> knn_oracle(const Matrix& x, std::size_t k) {
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    std::vector<std::pair<double, std::uint32_t>> d;
    for (std::size_t j = 0; j < x.rows(); ++j) {
      if (j == i) continue;
      double s = 0.0;
      for (std::size_t c = 0; c < x.cols(); ++c) s += (x(i, c) - x(j, c)) * (x(i, c) - x(j, c));
      d.push_back({s, static_cast<std::uint32_t>(j)});
    }
    std::sort(d.begin(), d.end());
    for (std::size_t r = 0; r < k; ++r) out.push_back(d[r].second);
  }
  return out;
}

double dense_modularity(const std::vector<std::vector<double>>& a, const std::vector<std::uint32_t>& c,
                        double gamma) {
  const std::size_t n = a.size();
  std::vector<double> k(n, 0.0);
  double two_m = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      k[i] += a[i][j];
      two_m += a[i][j];
    }
  double q = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (c[i] == c[j]) q += a[i][j] - gamma * k[i] * k[j] / two_m;
  return q / two_m;
}

}  // namespace

TEST_CASE("build_knn matches a full sort of pairwise distances") {
  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix x = random_matrix(30, 4, rng);
    const KnnGraph g = build_knn(x, 5);
    const auto expected = knn_oracle(x, 5);
    CHECK(g.node_count() == 30);
    CHECK(g.edge_count() == 150);
    for (std::size_t i = 0; i < 30; ++i) {
      auto nb = g.neighbors(i);
      for (std::size_t r = 0; r < 5; ++r) CHECK(nb[r] == expected[i * 5 + r]);
    }
  }
}

TEST_CASE("build_knn breaks distance ties by the lower index") {
  Matrix x(6, 2, 1.0);  // all rows identical
  const KnnGraph g = build_knn(x, 3);
  CHECK(std::vector<std::uint32_t>(g.neighbors(0).begin(), g.neighbors(0).end()) ==
        std::vector<std::uint32_t>{1, 2, 3});
  CHECK(std::vector<std::uint32_t>(g.neighbors(4).begin(), g.neighbors(4).end()) ==
        std::vector<std::uint32_t>{0, 1, 2});
  CHECK(build_knn(x, 3) == g);
}

TEST_CASE("build_knn rejects bad inputs") {
  Rng rng(1);
  const Matrix x = random_matrix(4, 2, rng);
  CHECK_THROWS_AS(build_knn(x, 4), ParameterError);
  CHECK_THROWS_AS(build_knn(x, 0), ParameterError);
  Matrix bad = x;
  bad(2, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(build_knn(bad, 2), DomainError);
}

TEST_CASE("KnnGraph validates its adjacency") {
  const std::vector<std::uint32_t> self_loop{0, 1, 0, 2, 0, 1};
  CHECK_THROWS_AS(KnnGraph(3, 2, self_loop), ParameterError);
  const std::vector<std::uint32_t> duplicate{1, 1, 0, 2, 0, 1};
  CHECK_THROWS_AS(KnnGraph(3, 2, duplicate), ParameterError);
  const std::vector<std::uint32_t> ok{1, 2, 0, 2, 0, 1};
  CHECK_NOTHROW(KnnGraph(3, 2, ok));
}

TEST_CASE("neighbourhood averages match a loop and differentiate correctly") {
  Rng rng(5);
  const Matrix x = random_matrix(10, 3, rng);
  const KnnGraph g = build_knn(x, 3);
  const Matrix z = random_matrix(10, 4, rng);
  const Matrix all = neighborhood_averages(z, g);
  for (std::size_t i = 0; i < 10; ++i) {
    const auto one = neighborhood_average(z, g, i);
    for (std::size_t c = 0; c < 4; ++c) {
      double s = 0.0;
      for (auto j : g.neighbors(i)) s += z(j, c);
      CHECK(one[c] == doctest::Approx(s / 3.0).epsilon(1e-14));
      CHECK(all(i, c) == one[c]);
    }
  }
  const Matrix w = random_matrix(10, 4, rng);
  CHECK(testing::gradient_error(
            [&](ad::Tape& t, ad::Var v) { return ad::sum(ad::mul(ad::neighbor_mean(v, g), t.constant(w))); }, z) <
        1e-6);
}

TEST_CASE("symmetrize makes each directed edge one undirected unit edge") {
  const std::vector<std::uint32_t> adj{1, 0, 0};  // 0->1, 1->0, 2->0 (k = 1)
  const KnnGraph g(3, 1, adj);
  const auto u = symmetrize(g);
  CHECK(u.edge_count() == 2);
  CHECK(u.total_weight() == 4.0);
  CHECK(u.degree(0) == 2.0);
  CHECK(u.degree(2) == 1.0);
}

TEST_CASE("undirected graph rejects self-loops and negative weights") {
  UndirectedWeightedGraph g(3);
  CHECK_THROWS_AS(g.add_edge(1, 1), ParameterError);
  CHECK_THROWS_AS(g.add_edge(0, 1, -1.0), ParameterError);
  g.add_edge(0, 1, 2.0);
  g.add_edge(1, 0, 1.0);
  CHECK(g.edge_count() == 1);
  CHECK(g.degree(0) == 3.0);
}

TEST_CASE("modularity of two equal disjoint cliques split correctly is 1/2") {
  UndirectedWeightedGraph g(8);
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = a + 1; b < 4; ++b) {
      g.add_edge(a, b);
      g.add_edge(a + 4, b + 4);
    }
  const std::vector<std::uint32_t> split{0, 0, 0, 0, 1, 1, 1, 1};
  CHECK(modularity(g, split) == doctest::Approx(0.5).epsilon(1e-15));
  const std::vector<std::uint32_t> one(8, 0);
  CHECK(modularity(g, one) == doctest::Approx(0.0));
}

TEST_CASE("modularity matches the dense definition on random weighted graphs") {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 12;
    std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
    UndirectedWeightedGraph g(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (rng.uniform() < 0.3) {
          const double w = rng.uniform(0.1, 2.0);
          a[i][j] = a[j][i] = w;
          g.add_edge(i, j, w);
        }
    std::vector<std::uint32_t> c(n);
    for (auto& v : c) v = static_cast<std::uint32_t>(rng.below(4));
    const double gamma = rng.uniform(0.1, 2.0);
    CHECK(modularity(g, c, gamma) == doctest::Approx(dense_modularity(a, c, gamma)).epsilon(1e-12));
  }
}

TEST_CASE("modularity preconditions") {
  UndirectedWeightedGraph empty(3);
  const std::vector<std::uint32_t> c{0, 1, 2};
  CHECK_THROWS_AS(modularity(empty, c), UndefinedError);
  UndirectedWeightedGraph g(3);
  g.add_edge(0, 1);
  CHECK_THROWS_AS(modularity(g, c, 0.0), ParameterError);
  const std::vector<std::uint32_t> short_c{0, 1};
  CHECK_THROWS_AS(modularity(g, short_c), ParameterError);
}
