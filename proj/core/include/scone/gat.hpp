#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "scone/graph.hpp"
#include "scone/matrix.hpp"
#include "scone/rng.hpp"
#include "scone/tape.hpp"

namespace scone {

enum class Activation { leaky_relu, identity };

// Single-head GATv2 layer.
//
//   e(h_i, h_j) = a^T LeakyReLU([h_i || h_j] W)
//   alpha_ij    = softmax over j in N(i) u {i} of e(h_i, h_j)
//   h'_i        = act( sum_j alpha_ij (h_j W_v) )
//
// `weight` is the (2 d_in x d_out) concatenation transform: rows [0, d_in)
// multiply the target h_i, rows [d_in, 2 d_in) the source h_j. Self-loops
// are added inside the layer.
struct GatLayer {
  ad::Parameter weight;
  ad::Parameter attention;  // d_out x 1
  ad::Parameter value;      // d_in x d_out
  double slope = 0.2;
  Activation activation = Activation::leaky_relu;

  std::size_t in_dim() const noexcept { return value.value.rows(); }
  std::size_t out_dim() const noexcept { return value.value.cols(); }

  std::vector<ad::Parameter*> parameters() { return {&weight, &attention, &value}; }

  // Uniform Glorot initialisation, U(+-sqrt(6 / (fan_in + fan_out))) per matrix.
  static GatLayer glorot(std::size_t in_dim, std::size_t out_dim, Activation act, Rng& rng);
  static GatLayer zeros(std::size_t in_dim, std::size_t out_dim, Activation act);
};

// Attention weights per target node over N(i) u {i}, stored CSR-style. The
// self edge comes first in every row, followed by N(i) in KNN order.
struct AttentionMap {
  std::vector<std::size_t> offsets;  // node_count + 1 entries
  std::vector<std::uint32_t> sources;
  std::vector<double> weights;

  std::size_t node_count() const noexcept { return offsets.empty() ? 0 : offsets.size() - 1; }
  std::span<const std::uint32_t> sources_of(std::size_t i) const noexcept {
    return {sources.data() + offsets[i], offsets[i + 1] - offsets[i]};
  }
  std::span<const double> weights_of(std::size_t i) const noexcept {
    return {weights.data() + offsets[i], offsets[i + 1] - offsets[i]};
  }
};

// Raw scores e(h_i, h_j), laid out like AttentionMap::weights.
std::vector<double> attention_scores(const Matrix& h, const KnnGraph& g, const GatLayer& layer);
AttentionMap attention(const Matrix& h, const KnnGraph& g, const GatLayer& layer);

Matrix gat_forward(const Matrix& h, const KnnGraph& g, GatLayer& layer);
// g must outlive the tape.
ad::Var gat_forward(ad::Tape& tape, ad::Var h, const KnnGraph& g, GatLayer& layer);

}  // namespace scone
