#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "scone/gat.hpp"
#include "scone/graph.hpp"
#include "scone/matrix.hpp"
#include "scone/tape.hpp"

namespace scone {

enum class Likelihood { gaussian, bernoulli };

std::string to_string(Likelihood l);
Likelihood likelihood_from_string(const std::string& s);

struct ViewDescriptor {
  std::string name;
  std::size_t dim = 0;
  Likelihood likelihood = Likelihood::gaussian;

  friend bool operator==(const ViewDescriptor&, const ViewDescriptor&) = default;
};

struct ModelConfig {
  std::size_t hidden_dim = 256;
  std::size_t latent_dim = 128;
  double slope = 0.2;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Per-view GATv2 encoder (d_o -> hidden -> latent) and mirrored decoder
// (latent -> hidden -> d_o), plus one bilinear contrastive head per view.
class SconeModel {
 public:
  struct ViewModules {
    std::array<GatLayer, 2> encoder;
    std::array<GatLayer, 2> decoder;
    ad::Parameter head;  // latent x latent
  };

  SconeModel(std::vector<ViewDescriptor> views, ModelConfig config, std::uint64_t seed);
  // Same architecture with every parameter set to zero.
  static SconeModel zeros(std::vector<ViewDescriptor> views, ModelConfig config);

  const std::vector<ViewDescriptor>& views() const noexcept { return views_; }
  const ModelConfig& config() const noexcept { return config_; }
  std::size_t view_count() const noexcept { return views_.size(); }
  std::size_t latent_dim() const noexcept { return config_.latent_dim; }

  ViewModules& modules(std::size_t view) { return modules_.at(view); }
  const ViewModules& modules(std::size_t view) const { return modules_.at(view); }

  // Stable order: per view, encoder layers, decoder layers, head.
  std::vector<ad::Parameter*> parameters();
  std::vector<const ad::Parameter*> parameters() const;
  std::size_t parameter_count() const;

 private:
  SconeModel(std::vector<ViewDescriptor> views, ModelConfig config);

  std::vector<ViewDescriptor> views_;
  ModelConfig config_;
  std::vector<ViewModules> modules_;
};

// z_o = E_o(x_o, G_o). g must outlive the tape.
ad::Var encode_view(ad::Tape& tape, SconeModel& model, std::size_t view, ad::Var x,
                    const KnnGraph& g);
Matrix encode_view(SconeModel& model, std::size_t view, const Matrix& x, const KnnGraph& g);

// x_hat_o = D_o(z, G_o). For bernoulli views the output is logits.
ad::Var decode_view(ad::Tape& tape, SconeModel& model, std::size_t view, ad::Var z,
                    const KnnGraph& g);
Matrix decode_view(SconeModel& model, std::size_t view, const Matrix& z, const KnnGraph& g);

// One view's latents and, for each latent row, its row in the joint space.
struct PoolTerm {
  ad::Var latent;
  std::span<const std::size_t> rows;
};

// Sum pooling over views with the zero vector standing in for views that do
// not contain a sample. Each joint entry is summed in a canonical (sorted)
// order, so the result does not depend on the order of `terms`. Throws
// ContractError when a joint row receives no contribution.
ad::Var pool(std::span<const PoolTerm> terms, std::size_t union_size);
Matrix pool(std::span<const Matrix> latents, std::span<const std::vector<std::size_t>> rows,
            std::size_t union_size);

ad::Var loss_rec_mse(ad::Var x, ad::Var x_hat);
double loss_rec_mse(const Matrix& x, const Matrix& x_hat);
// Mean binary cross-entropy of probabilities p against decoder logits.
// Throws DomainError when p leaves [0, 1].
ad::Var loss_rec_bce(const Matrix& p, ad::Var logits);
double loss_rec_bce(const Matrix& p, const Matrix& logits);

// Row pairs into the two subset latents: positives (i in s1, same sample in
// s2) and negatives (i exclusive to s1, j exclusive to s2).
struct PairLists {
  std::vector<std::pair<std::size_t, std::size_t>> positives;
  std::vector<std::pair<std::size_t, std::size_t>> negatives;
};

// n1[i] W n2[j]^T with n the neighbourhood averages of each subset.
double contrastive_score(const Matrix& z1, const KnnGraph& g1, std::size_t i, const Matrix& z2,
                         const KnnGraph& g2, std::size_t j, const Matrix& head);

// -(1/(P+N)) [sum_pos log s(C) + sum_neg log(1 - s(C))].
// Throws SamplingError when there are no positives.
ad::Var loss_contrastive(ad::Var z1, const KnnGraph& g1, ad::Var z2, const KnnGraph& g2,
                         const PairLists& pairs, ad::Var head);
double loss_contrastive(const Matrix& z1, const KnnGraph& g1, const Matrix& z2,
                        const KnnGraph& g2, const PairLists& pairs, const Matrix& head);

// Number of bilinear scores evaluated by loss_contrastive on this thread.
std::uint64_t contrastive_evaluations() noexcept;
void reset_contrastive_evaluations() noexcept;

struct LossBreakdown {
  std::vector<double> reconstruction;
  std::vector<double> contrastive;
  double alpha = 1.0;
  double beta = 10.0;
  double total = 0.0;
};

// total = alpha * sum(reconstruction) + beta * sum(contrastive)
LossBreakdown loss_total(std::span<const double> reconstruction,
                         std::span<const double> contrastive, double alpha, double beta);
std::pair<ad::Var, LossBreakdown> loss_total(std::span<const ad::Var> reconstruction,
                                             std::span<const ad::Var> contrastive, double alpha,
                                             double beta);

}  // namespace scone
