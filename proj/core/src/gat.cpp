#include "scone/gat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "scone/error.hpp"

namespace scone {

namespace {

struct SelfLoopCsr {
  tracked_vector<std::size_t> offsets;
  tracked_vector<std::uint32_t> sources;
};

SelfLoopCsr with_self_loops(const KnnGraph& g) {
  const std::size_t n = g.node_count();
  const std::size_t width = g.k() + 1;
  SelfLoopCsr csr;
  csr.offsets.resize(n + 1);
  csr.sources.resize(n * width);
  for (std::size_t i = 0; i < n; ++i) {
    csr.offsets[i] = i * width;
    csr.sources[i * width] = static_cast<std::uint32_t>(i);
    auto nb = g.neighbors(i);
    std::copy(nb.begin(), nb.end(), csr.sources.begin() + static_cast<std::ptrdiff_t>(i * width + 1));
  }
  csr.offsets[n] = n * width;
  return csr;
}

void check_layer_input(const Matrix& h, const KnnGraph& g, const GatLayer& layer) {
  if (h.rows() != g.node_count()) {
    throw DimensionError("GAT: " + std::to_string(h.rows()) + " feature rows for a graph of " +
                         std::to_string(g.node_count()) + " nodes");
  }
  if (h.cols() != layer.in_dim()) {
    throw DimensionError("GAT: input width " + std::to_string(h.cols()) +
                         " does not match layer input " + std::to_string(layer.in_dim()));
  }
  if (layer.weight.value.rows() != 2 * layer.in_dim() ||
      layer.weight.value.cols() != layer.out_dim() ||
      layer.attention.value.rows() != layer.out_dim() || layer.attention.value.cols() != 1) {
    throw DimensionError("GAT: inconsistent layer parameter shapes");
  }
}

double leaky(double x, double slope) { return x > 0.0 ? x : slope * x; }

// Scores for one target row: e_j = a . lrelu(p_i + q_j).
void score_row(std::span<const double> p_i, const Matrix& q, std::span<const std::uint32_t> sources,
               std::span<const double> a, double slope, double* out) {
  const std::size_t d = p_i.size();
  for (std::size_t e = 0; e < sources.size(); ++e) {
    const double* qj = q.row(sources[e]).data();
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) s += a[c] * leaky(p_i[c] + qj[c], slope);
    out[e] = s;
  }
}

void softmax_inplace(double* x, std::size_t n) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, x[i]);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = std::exp(x[i] - mx);
    z += x[i];
  }
  for (std::size_t i = 0; i < n; ++i) x[i] /= z;
}

Matrix block_rows(const Matrix& w, std::size_t begin, std::size_t count) {
  Matrix out(count, w.cols());
  for (std::size_t r = 0; r < count; ++r) {
    auto src = w.row(begin + r);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

// Fused attention + aggregation: out_i = sum_j alpha_ij v_j with
// alpha = softmax_j(a . lrelu(p_i + q_j)). Stores alpha per edge and
// recomputes the per-edge pre-activations in the backward pass.
ad::Var attend(ad::Var p, ad::Var q, ad::Var a, ad::Var v, const KnnGraph& g, double slope) {
  ad::Tape& t = *p.tape;
  auto csr = std::make_shared<const SelfLoopCsr>(with_self_loops(g));
  const Matrix& pv = p.value();
  const Matrix& qv = q.value();
  const Matrix& av = a.value();
  const Matrix& vv = v.value();
  const std::size_t n = g.node_count();

  auto alpha = std::make_shared<tracked_vector<double>>(csr->sources.size());
  Matrix out(n, vv.cols());
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t begin = csr->offsets[i];
    const std::size_t deg = csr->offsets[i + 1] - begin;
    std::span<const std::uint32_t> src(csr->sources.data() + begin, deg);
    double* w = alpha->data() + begin;
    score_row(pv.row(i), qv, src, av.values(), slope, w);
    softmax_inplace(w, deg);
    auto dst = out.row(i);
    for (std::size_t e = 0; e < deg; ++e) {
      auto vj = vv.row(src[e]);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += w[e] * vj[c];
    }
  }

  return t.record(std::move(out), {p, q, a, v},
                  [p, q, a, v, csr, alpha, slope](ad::Tape& t, const Matrix& g_out) {
    const Matrix& pv = t.value(p);
    const Matrix& qv = t.value(q);
    const Matrix& av = t.value(a);
    const Matrix& vv = t.value(v);
    const std::size_t n = pv.rows();
    const std::size_t d = pv.cols();
    Matrix gp(pv.rows(), pv.cols());
    Matrix gq(qv.rows(), qv.cols());
    Matrix ga(av.rows(), av.cols());
    Matrix gv(vv.rows(), vv.cols());
    std::vector<double> g_alpha;
    std::vector<double> u(d);

    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t begin = csr->offsets[i];
      const std::size_t deg = csr->offsets[i + 1] - begin;
      const std::uint32_t* src = csr->sources.data() + begin;
      const double* w = alpha->data() + begin;
      auto gi = g_out.row(i);

      g_alpha.assign(deg, 0.0);
      double weighted = 0.0;
      for (std::size_t e = 0; e < deg; ++e) {
        auto vj = vv.row(src[e]);
        auto gvj = gv.row(src[e]);
        double dot = 0.0;
        for (std::size_t c = 0; c < gi.size(); ++c) {
          gvj[c] += w[e] * gi[c];
          dot += gi[c] * vj[c];
        }
        g_alpha[e] = dot;
        weighted += w[e] * dot;
      }

      auto pi = pv.row(i);
      auto gpi = gp.row(i);
      for (std::size_t e = 0; e < deg; ++e) {
        const double g_score = w[e] * (g_alpha[e] - weighted);
        if (g_score == 0.0) continue;
        auto qj = qv.row(src[e]);
        auto gqj = gq.row(src[e]);
        for (std::size_t c = 0; c < d; ++c) {
          const double s = pi[c] + qj[c];
          ga.data()[c] += g_score * leaky(s, slope);
          const double gs = g_score * av.data()[c] * (s > 0.0 ? 1.0 : slope);
          gpi[c] += gs;
          gqj[c] += gs;
        }
      }
    }
    t.accumulate(p, std::move(gp));
    t.accumulate(q, std::move(gq));
    t.accumulate(a, std::move(ga));
    t.accumulate(v, std::move(gv));
  });
}

}  // namespace

GatLayer GatLayer::glorot(std::size_t in_dim, std::size_t out_dim, Activation act, Rng& rng) {
  if (in_dim == 0 || out_dim == 0) throw ParameterError("GatLayer: dimensions must be positive");
  auto init = [&rng](std::size_t rows, std::size_t cols, std::size_t fan_in, std::size_t fan_out) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix m(rows, cols);
    for (double& v : m.values()) v = rng.uniform(-bound, bound);
    return ad::Parameter(std::move(m));
  };
  GatLayer layer;
  layer.weight = init(2 * in_dim, out_dim, 2 * in_dim, out_dim);
  layer.attention = init(out_dim, 1, out_dim, 1);
  layer.value = init(in_dim, out_dim, in_dim, out_dim);
  layer.activation = act;
  return layer;
}

GatLayer GatLayer::zeros(std::size_t in_dim, std::size_t out_dim, Activation act) {
  if (in_dim == 0 || out_dim == 0) throw ParameterError("GatLayer: dimensions must be positive");
  GatLayer layer;
  layer.weight = ad::Parameter(Matrix(2 * in_dim, out_dim));
  layer.attention = ad::Parameter(Matrix(out_dim, 1));
  layer.value = ad::Parameter(Matrix(in_dim, out_dim));
  layer.activation = act;
  return layer;
}

std::vector<double> attention_scores(const Matrix& h, const KnnGraph& g, const GatLayer& layer) {
  check_layer_input(h, g, layer);
  const std::size_t d_in = layer.in_dim();
  const Matrix p = matmul(h, block_rows(layer.weight.value, 0, d_in));
  const Matrix q = matmul(h, block_rows(layer.weight.value, d_in, d_in));
  const SelfLoopCsr csr = with_self_loops(g);
  std::vector<double> scores(csr.sources.size());
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    const std::size_t begin = csr.offsets[i];
    std::span<const std::uint32_t> src(csr.sources.data() + begin, csr.offsets[i + 1] - begin);
    score_row(p.row(i), q, src, layer.attention.value.values(), layer.slope, scores.data() + begin);
  }
  return scores;
}

AttentionMap attention(const Matrix& h, const KnnGraph& g, const GatLayer& layer) {
  AttentionMap map;
  map.weights = attention_scores(h, g, layer);
  const SelfLoopCsr csr = with_self_loops(g);
  map.offsets.assign(csr.offsets.begin(), csr.offsets.end());
  map.sources.assign(csr.sources.begin(), csr.sources.end());
  for (std::size_t i = 0; i < map.node_count(); ++i) {
    softmax_inplace(map.weights.data() + map.offsets[i], map.offsets[i + 1] - map.offsets[i]);
  }
  return map;
}

ad::Var gat_forward(ad::Tape& tape, ad::Var h, const KnnGraph& g, GatLayer& layer) {
  check_layer_input(h.value(), g, layer);
  const std::size_t d_in = layer.in_dim();
  ad::Var w = tape.parameter(layer.weight);
  ad::Var a = tape.parameter(layer.attention);
  ad::Var wv = tape.parameter(layer.value);
  ad::Var p = ad::matmul(h, ad::slice_rows(w, 0, d_in));
  ad::Var q = ad::matmul(h, ad::slice_rows(w, d_in, d_in));
  ad::Var v = ad::matmul(h, wv);
  ad::Var out = attend(p, q, a, v, g, layer.slope);
  if (layer.activation == Activation::leaky_relu) out = ad::leaky_relu(out, layer.slope);
  return out;
}

Matrix gat_forward(const Matrix& h, const KnnGraph& g, GatLayer& layer) {
  ad::Tape tape(false);
  ad::Var out = gat_forward(tape, tape.constant(h), g, layer);
  return out.value();
}

}  // namespace scone
