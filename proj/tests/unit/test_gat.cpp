#include <doctest.h>

#include <cmath>
#include <numeric>

#include "scone/error.hpp"
#include "scone/gat.hpp"
#include "test_support.hpp"

using namespace scone;
using scone::testing::gradient_error;
using scone::testing::random_matrix;
using scone::testing::relative_error;

namespace {

double lrelu(double x, double s) { return x > 0 ? x : s * x; }

// Direct evaluation: score_ij = a . lrelu(W [h_i ; h_j]) over j in {i} + N(i),
// out_i = act(sum_j softmax_j(score) * (h_j V)).
Matrix gat_oracle(const Matrix& h, const KnnGraph& g, const GatLayer& layer) {
  const std::size_t n = h.rows(), din = layer.in_dim(), dout = layer.out_dim();
  const Matrix& w = layer.weight.value;
  Matrix out(n, dout);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> js{i};
    for (auto j : g.neighbors(i)) js.push_back(j);
    std::vector<double> s(js.size());
    for (std::size_t e = 0; e < js.size(); ++e) {
      for (std::size_t c = 0; c < dout; ++c) {
        double pre = 0.0;
        for (std::size_t r = 0; r < din; ++r) pre += h(i, r) * w(r, c) + h(js[e], r) * w(din + r, c);
        s[e] += layer.attention.value(c, 0) * lrelu(pre, layer.slope);
      }
    }
    double z = 0.0;
    for (double& x : s) z += (x = std::exp(x));
    for (std::size_t e = 0; e < js.size(); ++e)
      for (std::size_t c = 0; c < dout; ++c) {
        double v = 0.0;
        for (std::size_t r = 0; r < din; ++r) v += h(js[e], r) * layer.value.value(r, c);
        out(i, c) += s[e] / z * v;
      }
    if (layer.activation == Activation::leaky_relu)
      for (std::size_t c = 0; c < dout; ++c) out(i, c) = lrelu(out(i, c), layer.slope);
  }
  return out;
}

struct Fixture {
  Rng rng{17};
  Matrix h = random_matrix(9, 4, rng);
  KnnGraph g = build_knn(h, 3);
  GatLayer layer = GatLayer::glorot(4, 5, Activation::leaky_relu, rng);
  Matrix w = random_matrix(9, 5, rng);
};

double weighted_output(const Matrix& h, const KnnGraph& g, GatLayer& layer, const Matrix& w) {
  ad::Tape tape(false);
  return ad::sum(ad::mul(gat_forward(tape, tape.constant(h), g, layer), tape.constant(w))).value()(0, 0);
}

}  // namespace

TEST_CASE("GAT forward matches direct evaluation") {
  Fixture f;
  for (Activation act : {Activation::leaky_relu, Activation::identity}) {
    f.layer.activation = act;
    const Matrix got = gat_forward(f.h, f.g, f.layer);
    const Matrix want = gat_oracle(f.h, f.g, f.layer);
    REQUIRE(got.rows() == 9);
    REQUIRE(got.cols() == 5);
    for (std::size_t i = 0; i < got.size(); ++i)
      CHECK(relative_error(got.values()[i], want.values()[i], 1e-12) < 1e-12);
  }
}

TEST_CASE("attention weights are a distribution over self and neighbours") {
  Fixture f;
  const AttentionMap map = attention(f.h, f.g, f.layer);
  CHECK(map.node_count() == 9);
  for (std::size_t i = 0; i < 9; ++i) {
    auto src = map.sources_of(i);
    REQUIRE(src.size() == 4);
    CHECK(src[0] == i);
    double total = 0.0;
    for (double w : map.weights_of(i)) {
      CHECK(w > 0.0);
      total += w;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("zero attention gives uniform weights") {
  Fixture f;
  f.layer.attention.value.fill(0.0);
  const AttentionMap map = attention(f.h, f.g, f.layer);
  for (double w : map.weights) CHECK(w == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("GAT is equivariant to node relabelling") {
  Fixture f;
  std::vector<std::size_t> perm(9);
  std::iota(perm.begin(), perm.end(), 0);
  f.rng.shuffle(std::span<std::size_t>(perm));
  std::vector<std::size_t> inv(9);
  for (std::size_t i = 0; i < 9; ++i) inv[perm[i]] = i;
  // New node i is old node perm[i].
  Matrix hp(9, 4);
  std::vector<std::uint32_t> adj;
  for (std::size_t i = 0; i < 9; ++i) {
    for (std::size_t c = 0; c < 4; ++c) hp(i, c) = f.h(perm[i], c);
    for (auto j : f.g.neighbors(perm[i])) adj.push_back(static_cast<std::uint32_t>(inv[j]));
  }
  const KnnGraph gp(9, 3, adj);
  const Matrix a = gat_forward(f.h, f.g, f.layer);
  const Matrix b = gat_forward(hp, gp, f.layer);
  for (std::size_t i = 0; i < 9; ++i)
    for (std::size_t c = 0; c < 5; ++c) CHECK(b(i, c) == a(perm[i], c));
}

TEST_CASE("GAT input gradient matches finite differences") {
  Fixture f;
  for (Activation act : {Activation::leaky_relu, Activation::identity}) {
    f.layer.activation = act;
    const double err = gradient_error(
        [&](ad::Tape& t, ad::Var x) {
          return ad::sum(ad::mul(gat_forward(t, x, f.g, f.layer), t.constant(f.w)));
        },
        f.h);
    CHECK(err < 1e-6);
  }
}

TEST_CASE("GAT parameter gradients match finite differences") {
  Fixture f;
  for (auto* p : f.layer.parameters()) p->grad.fill(0.0);
  {
    ad::Tape tape;
    auto out = gat_forward(tape, tape.constant(f.h), f.g, f.layer);
    tape.backward(ad::sum(ad::mul(out, tape.constant(f.w))));
  }
  const double h = 1e-6;
  double worst = 0.0;
  for (auto* p : f.layer.parameters()) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double orig = p->value.values()[i];
      p->value.values()[i] = orig + h;
      const double up = weighted_output(f.h, f.g, f.layer, f.w);
      p->value.values()[i] = orig - h;
      const double down = weighted_output(f.h, f.g, f.layer, f.w);
      p->value.values()[i] = orig;
      worst = std::max(worst, relative_error(p->grad.values()[i], (up - down) / (2 * h)));
    }
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("GAT rejects mismatched shapes") {
  Fixture f;
  const Matrix wrong_rows = random_matrix(8, 4, f.rng);
  CHECK_THROWS_AS(gat_forward(wrong_rows, f.g, f.layer), DimensionError);
  const Matrix wrong_cols = random_matrix(9, 3, f.rng);
  CHECK_THROWS_AS(gat_forward(wrong_cols, f.g, f.layer), DimensionError);
  CHECK_THROWS_AS(GatLayer::glorot(0, 3, Activation::identity, f.rng), ParameterError);
}

TEST_CASE("glorot initialisation respects its bounds") {
  Rng rng(3);
  const GatLayer layer = GatLayer::glorot(50, 256, Activation::leaky_relu, rng);
  const double bw = std::sqrt(6.0 / (100 + 256));
  const double bv = std::sqrt(6.0 / (50 + 256));
  for (double v : layer.weight.value.values()) CHECK(std::abs(v) <= bw);
  for (double v : layer.value.value.values()) CHECK(std::abs(v) <= bv);
  CHECK(layer.weight.value.rows() == 100);
  CHECK(layer.attention.value.rows() == 256);
}
