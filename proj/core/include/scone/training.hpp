#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "scone/adam.hpp"
#include "scone/data.hpp"
#include "scone/model.hpp"
#include "scone/rng.hpp"
#include "scone/subsetting.hpp"
#include "scone/text_io.hpp"

namespace scone {

// Subset size given either as a count or as a fraction of n.
struct SubsetSize {
  bool is_fraction = true;
  double value = 0.2;

  static SubsetSize count(std::size_t k) { return {false, static_cast<double>(k)}; }
  static SubsetSize fraction(double f) { return {true, f}; }
  // "0.2" and ".5" are fractions, "200" is a count.
  static SubsetSize parse(const std::string& s);

  // round(f * n) for fractions.
  std::size_t resolve(std::size_t n) const;
  std::string to_string() const;
};

struct TrainConfig {
  std::size_t epochs = 128;
  SubsetSize k_s;
  std::size_t k_k = 15;
  double alpha = 1.0;
  double beta = 10.0;
  AdamConfig adam;
  std::uint64_t seed = 0;
  double min_overlap = 0.1;
  std::size_t checkpoint_interval = 0;  // 0: no intermediate checkpoints
  ModelConfig model;
  // Subset pairs are redrawn when a view ends up with too few rows or no
  // positive/negative pairs; training fails after this many attempts.
  std::size_t max_redraws = 100;

  // Throws ParameterError on violated invariants.
  void validate() const;
};

// Reads epochs, k_s, k_k, alpha, beta, learning_rate, beta1, beta2, epsilon,
// seed, min_overlap, checkpoint_interval, hidden_dim, latent_dim, slope.
// Missing keys keep `base` values; unknown keys are rejected.
TrainConfig train_config_from(const KeyValueConfig& cfg, TrainConfig base = {});
std::map<std::string, std::string> to_key_values(const TrainConfig& config);

struct EpochRecord {
  std::size_t epoch = 0;
  LossBreakdown loss;
  double wall_ms = 0.0;
  std::size_t peak_bytes = 0;  // tracked high-water mark above the epoch's starting live size
  std::uint64_t contrastive_evaluations = 0;
  std::size_t overlap = 0;
  std::size_t redraws = 0;
  std::size_t graph_edges = 0;  // over every KNN graph built in the epoch
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
};

// Union of the views' samples in first-appearance order (views scanned in
// order), and for each view the joint index of each of its rows.
struct ViewAlignment {
  std::vector<std::string> samples;
  std::vector<std::vector<std::size_t>> rows;
};
ViewAlignment align_views(std::span<const OmicsView> views);

// Throws DimensionError when the views do not match the model's
// descriptors (count, width, likelihood).
void check_views(const SconeModel& model, std::span<const OmicsView> views);

// Everything one subset-pair epoch consumes, drawn up front so the loss is a
// pure function of the model parameters.
struct EpochBatch {
  SubsetPair pair;
  std::vector<SubsetView> first;   // per view, rows of s1 the view holds
  std::vector<SubsetView> second;  // per view, rows of s2 the view holds
  std::vector<PairLists> pairs;    // per view, rows of first x rows of second
  std::size_t redraws = 0;
};

// Draws subset pairs until every view has at least k_k + 1 rows in both
// subsets and at least one positive and one negative pair, up to
// config.max_redraws attempts (SamplingError after that).
EpochBatch draw_batch(std::span<const OmicsView> views, const ViewAlignment& alignment,
                      const TrainConfig& config, std::size_t k_s, Rng& rng);

// Total loss of one batch: reconstruction of x' || x'' from the pooled
// latents of each subset, plus the per-view contrastive loss.
std::pair<ad::Var, LossBreakdown> batch_loss(ad::Tape& tape, SconeModel& model,
                                             const EpochBatch& batch, const TrainConfig& config);

struct TrainResult {
  SconeModel model;
  TrainLog log;
};

using EpochHook = std::function<void(const EpochRecord&, const SconeModel&)>;

// Fresh model seeded from config.seed, trained for config.epochs epochs of
// one subset pair each. `on_checkpoint` fires every checkpoint_interval
// epochs; `on_epoch` after every epoch. Throws ParameterError before the
// first epoch when the subset configuration is infeasible and TrainingError
// naming the epoch when the loss is not finite.
TrainResult train(std::span<const OmicsView> views, const TrainConfig& config,
                  const EpochHook& on_checkpoint = {}, const EpochHook& on_epoch = {});

// One subset-pair epoch on an existing model: sample the pair, build both
// subsets' per-view matrices and graphs, encode, pool, decode, evaluate the
// total loss, backpropagate and take an Adam step.
EpochRecord subset_epoch(SconeModel& model, AdamState& adam, std::span<const OmicsView> views,
                         const ViewAlignment& alignment, const TrainConfig& config,
                         std::size_t k_s, Rng& rng, std::size_t epoch_index = 0);

// Reference epoch over the whole data set at once, used to compare memory
// and time with subset_epoch: full per-view graphs, reconstruction of every
// sample, and the contrastive loss with every sample as its own positive
// and one negative per sample from a random derangement.
EpochRecord full_graph_epoch(SconeModel& model, AdamState& adam, std::span<const OmicsView> views,
                             const ViewAlignment& alignment, const TrainConfig& config, Rng& rng);

struct LatentSpace {
  std::vector<std::string> samples;        // joint sample ids, rows of z
  std::vector<Matrix> view_latents;        // z_o per view, rows as in the view
  std::vector<std::vector<std::size_t>> view_rows;  // joint index per view row
  Matrix z;
};

// Full-data inference: per-view KNN on all rows, encode, pool.
LatentSpace infer_latent(SconeModel& model, std::span<const OmicsView> views, std::size_t k_k = 15);

}  // namespace scone
