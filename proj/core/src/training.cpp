#include "scone/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "scone/error.hpp"
#include "scone/graph.hpp"

namespace scone {

SubsetSize SubsetSize::parse(const std::string& s) {
  const auto t = trim(s);
  if (t.find_first_of(".eE") != std::string_view::npos) {
    const double f = parse_double(t);
    if (!(f > 0.0 && f <= 1.0)) throw ParameterError("k_s fraction must lie in (0, 1], got " + std::string(t));
    return fraction(f);
  }
  return count(parse_size(t));
}

std::size_t SubsetSize::resolve(std::size_t n) const {
  if (!is_fraction) return static_cast<std::size_t>(value);
  return static_cast<std::size_t>(std::llround(value * static_cast<double>(n)));
}

std::string SubsetSize::to_string() const {
  if (!is_fraction) return std::to_string(static_cast<std::size_t>(value));
  std::string s = format_double(value);
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ParameterError("epochs must be at least 1");
  if (k_k < 1) throw ParameterError("k_k must be at least 1");
  if (!(min_overlap > 0.0 && min_overlap < 1.0)) throw ParameterError("min_overlap must lie in (0, 1)");
  if (k_s.is_fraction ? !(k_s.value > 0.0 && k_s.value <= 1.0) : k_s.value < 2) {
    throw ParameterError("k_s must be a fraction in (0, 1] or a count >= 2");
  }
  if (!std::isfinite(alpha) || !std::isfinite(beta) || alpha < 0.0 || beta < 0.0) {
    throw ParameterError("alpha and beta must be finite and non-negative");
  }
  if (!(adam.learning_rate >= 0.0) || !(adam.beta1 >= 0.0 && adam.beta1 < 1.0) ||
      !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) || !(adam.epsilon > 0.0)) {
    throw ParameterError("invalid optimiser settings");
  }
  if (model.hidden_dim == 0 || model.latent_dim == 0) throw ParameterError("layer widths must be positive");
  if (max_redraws == 0) throw ParameterError("max_redraws must be positive");
}

TrainConfig train_config_from(const KeyValueConfig& cfg, TrainConfig c) {
  static const char* known[] = {"epochs", "k_s", "k_k", "alpha", "beta", "learning_rate", "beta1",
                                "beta2", "epsilon", "seed", "min_overlap", "checkpoint_interval",
                                "hidden_dim", "latent_dim", "slope", "max_redraws"};
  for (const auto& [key, _] : cfg.values()) {
    if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
      throw ParameterError("unknown training setting '" + key + "'");
    }
  }
  c.epochs = cfg.get_size("epochs", c.epochs);
  if (auto ks = cfg.get("k_s")) c.k_s = SubsetSize::parse(*ks);
  c.k_k = cfg.get_size("k_k", c.k_k);
  c.alpha = cfg.get_double("alpha", c.alpha);
  c.beta = cfg.get_double("beta", c.beta);
  c.adam.learning_rate = cfg.get_double("learning_rate", c.adam.learning_rate);
  c.adam.beta1 = cfg.get_double("beta1", c.adam.beta1);
  c.adam.beta2 = cfg.get_double("beta2", c.adam.beta2);
  c.adam.epsilon = cfg.get_double("epsilon", c.adam.epsilon);
  c.seed = cfg.get_size("seed", c.seed);
  c.min_overlap = cfg.get_double("min_overlap", c.min_overlap);
  c.checkpoint_interval = cfg.get_size("checkpoint_interval", c.checkpoint_interval);
  c.model.hidden_dim = cfg.get_size("hidden_dim", c.model.hidden_dim);
  c.model.latent_dim = cfg.get_size("latent_dim", c.model.latent_dim);
  c.model.slope = cfg.get_double("slope", c.model.slope);
  c.max_redraws = cfg.get_size("max_redraws", c.max_redraws);
  c.validate();
  return c;
}

std::map<std::string, std::string> to_key_values(const TrainConfig& c) {
  return {{"epochs", std::to_string(c.epochs)},
          {"k_s", c.k_s.to_string()},
          {"k_k", std::to_string(c.k_k)},
          {"alpha", format_double(c.alpha)},
          {"beta", format_double(c.beta)},
          {"learning_rate", format_double(c.adam.learning_rate)},
          {"beta1", format_double(c.adam.beta1)},
          {"beta2", format_double(c.adam.beta2)},
          {"epsilon", format_double(c.adam.epsilon)},
          {"seed", std::to_string(c.seed)},
          {"min_overlap", format_double(c.min_overlap)},
          {"checkpoint_interval", std::to_string(c.checkpoint_interval)},
          {"hidden_dim", std::to_string(c.model.hidden_dim)},
          {"latent_dim", std::to_string(c.model.latent_dim)},
          {"slope", format_double(c.model.slope)},
          {"max_redraws", std::to_string(c.max_redraws)}};
}

ViewAlignment align_views(std::span<const OmicsView> views) {
  ViewAlignment a;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& v : views) {
    v.validate();
    std::vector<std::size_t> rows;
    rows.reserve(v.samples());
    for (const auto& id : v.sample_ids) {
      auto [it, inserted] = index.emplace(id, a.samples.size());
      if (inserted) a.samples.push_back(id);
      rows.push_back(it->second);
    }
    a.rows.push_back(std::move(rows));
  }
  return a;
}

void check_views(const SconeModel& model, std::span<const OmicsView> views) {
  if (views.size() != model.view_count()) {
    throw DimensionError("model has " + std::to_string(model.view_count()) + " views, got " +
                         std::to_string(views.size()));
  }
  for (std::size_t o = 0; o < views.size(); ++o) {
    const auto& d = model.views()[o];
    if (views[o].features() != d.dim) {
      throw DimensionError("view " + std::to_string(o) + " ('" + views[o].name + "') has " +
                           std::to_string(views[o].features()) + " features, model expects " +
                           std::to_string(d.dim));
    }
    if (views[o].likelihood != d.likelihood) {
      throw DimensionError("view " + std::to_string(o) + " ('" + views[o].name + "') is " +
                           to_string(views[o].likelihood) + ", model expects " + to_string(d.likelihood));
    }
  }
}

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

void check_feasible(std::span<const OmicsView> views, const TrainConfig& config, std::size_t n,
                    std::size_t k_s) {
  for (const auto& v : views) {
    if (v.samples() < config.k_k + 1) {
      throw ParameterError("view '" + v.name + "' has " + std::to_string(v.samples()) +
                           " samples, need at least k_k + 1 = " + std::to_string(config.k_k + 1));
    }
  }
  if (k_s < config.k_k + 1) {
    throw ParameterError("k_s = " + std::to_string(k_s) + " leaves no room for k_k = " +
                         std::to_string(config.k_k) + " neighbours");
  }
  if (k_s < 2 || n < k_s + 1) {
    throw ParameterError("k_s = " + std::to_string(k_s) + " needs more than k_s samples (n = " +
                         std::to_string(n) + ")");
  }
  if (min_overlap_count(n, k_s, config.min_overlap) > k_s - 1) {
    throw ParameterError("no overlap size satisfies min_overlap with k_s = " + std::to_string(k_s) +
                         " and n = " + std::to_string(n));
  }
}

ad::Var reconstruction_loss(ad::Tape& tape, Likelihood lik, const Matrix& target, ad::Var out) {
  return lik == Likelihood::gaussian ? loss_rec_mse(tape.constant(target), out)
                                     : loss_rec_bce(target, out);
}

Matrix stack(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() + b.rows(), a.cols());
  std::copy(a.values().begin(), a.values().end(), out.values().begin());
  std::copy(b.values().begin(), b.values().end(), out.values().begin() + static_cast<std::ptrdiff_t>(a.size()));
  return out;
}

void zero_grads(SconeModel& model) {
  for (ad::Parameter* p : model.parameters()) p->zero_grad();
}

void step(SconeModel& model, AdamState& adam, ad::Tape& tape, ad::Var loss, std::size_t epoch) {
  if (!std::isfinite(loss.value()(0, 0))) {
    throw TrainingError("epoch " + std::to_string(epoch) + ": loss is not finite");
  }
  zero_grads(model);
  tape.backward(loss);
  auto params = model.parameters();
  try {
    adam_step(adam, params);
  } catch (const TrainingError& e) {
    throw TrainingError("epoch " + std::to_string(epoch) + ": " + e.what());
  }
}

}  // namespace

EpochBatch draw_batch(std::span<const OmicsView> views, const ViewAlignment& alignment,
                      const TrainConfig& config, std::size_t k_s, Rng& rng) {
  const std::size_t n = alignment.samples.size();
  for (std::size_t attempt = 0; attempt < config.max_redraws; ++attempt) {
    EpochBatch b;
    b.redraws = attempt;
    b.pair = sample_subsets(n, k_s, config.min_overlap, rng);
    b.pair.pairs = build_pairs(b.pair, rng);
    bool ok = true;
    for (std::size_t o = 0; o < views.size() && ok; ++o) {
      try {
        b.first.push_back(materialize_view(views[o].x, alignment.rows[o], b.pair.s1, config.k_k, o, views[o].name));
        b.second.push_back(materialize_view(views[o].x, alignment.rows[o], b.pair.s2, config.k_k, o, views[o].name));
      } catch (const ParameterError&) {
        ok = false;
        break;
      }
      b.pairs.push_back(project_pairs(b.pair.pairs, b.first[o], b.second[o]));
      ok = !b.pairs[o].positives.empty() && !b.pairs[o].negatives.empty();
    }
    if (ok) return b;
  }
  throw SamplingError("no valid subset pair after " + std::to_string(config.max_redraws) +
                      " draws; increase k_s or reduce k_k");
}

std::pair<ad::Var, LossBreakdown> batch_loss(ad::Tape& tape, SconeModel& model,
                                             const EpochBatch& batch, const TrainConfig& config) {
  const std::size_t views = model.view_count();
  const std::size_t size1 = batch.pair.s1.size();
  const std::size_t size2 = batch.pair.s2.size();
  std::vector<ad::Var> z1(views), z2(views);
  std::vector<PoolTerm> terms1, terms2;
  for (std::size_t o = 0; o < views; ++o) {
    z1[o] = encode_view(tape, model, o, tape.constant(batch.first[o].x), batch.first[o].graph);
    z2[o] = encode_view(tape, model, o, tape.constant(batch.second[o].x), batch.second[o].graph);
    terms1.push_back({z1[o], batch.first[o].positions});
    terms2.push_back({z2[o], batch.second[o].positions});
  }
  ad::Var joint1 = pool(terms1, size1);
  ad::Var joint2 = pool(terms2, size2);

  std::vector<ad::Var> rec, con;
  for (std::size_t o = 0; o < views; ++o) {
    const SubsetView& a = batch.first[o];
    const SubsetView& b = batch.second[o];
    ad::Var out1 = decode_view(tape, model, o, ad::gather_rows(joint1, a.positions), a.graph);
    ad::Var out2 = decode_view(tape, model, o, ad::gather_rows(joint2, b.positions), b.graph);
    rec.push_back(reconstruction_loss(tape, model.views()[o].likelihood, stack(a.x, b.x),
                                      ad::concat_rows(out1, out2)));
    con.push_back(loss_contrastive(z1[o], a.graph, z2[o], b.graph, batch.pairs[o],
                                   tape.parameter(model.modules(o).head)));
  }
  return loss_total(rec, con, config.alpha, config.beta);
}

EpochRecord subset_epoch(SconeModel& model, AdamState& adam, std::span<const OmicsView> views,
                         const ViewAlignment& alignment, const TrainConfig& config,
                         std::size_t k_s, Rng& rng, std::size_t epoch_index) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t baseline = memory::reset_peak();
  const std::uint64_t evals = contrastive_evaluations();

  EpochRecord rec;
  rec.epoch = epoch_index;
  {
    const EpochBatch batch = draw_batch(views, alignment, config, k_s, rng);
    ad::Tape tape;
    auto [loss, breakdown] = batch_loss(tape, model, batch, config);
    step(model, adam, tape, loss, epoch_index);
    rec.loss = std::move(breakdown);
    rec.overlap = batch.pair.overlap();
    rec.redraws = batch.redraws;
    for (std::size_t o = 0; o < batch.first.size(); ++o)
      rec.graph_edges += batch.first[o].graph.edge_count() + batch.second[o].graph.edge_count();
  }
  rec.peak_bytes = memory::peak_bytes() - baseline;
  rec.contrastive_evaluations = contrastive_evaluations() - evals;
  rec.wall_ms = elapsed_ms(start);
  return rec;
}

EpochRecord full_graph_epoch(SconeModel& model, AdamState& adam, std::span<const OmicsView> views,
                             const ViewAlignment& alignment, const TrainConfig& config, Rng& rng) {
  check_views(model, views);
  const auto start = std::chrono::steady_clock::now();
  const std::size_t baseline = memory::reset_peak();
  const std::uint64_t evals = contrastive_evaluations();

  EpochRecord rec;
  {
    const std::size_t n = alignment.samples.size();
    ad::Tape tape;
    std::vector<KnnGraph> graphs;
    std::vector<PoolTerm> terms;
    std::vector<ad::Var> z;
    graphs.reserve(views.size());
    for (std::size_t o = 0; o < views.size(); ++o) {
      graphs.push_back(build_knn(views[o].x, config.k_k));
      z.push_back(encode_view(tape, model, o, tape.constant(views[o].x), graphs[o]));
      terms.push_back({z[o], alignment.rows[o]});
    }
    ad::Var joint = pool(terms, n);
    std::vector<ad::Var> recs, cons;
    for (std::size_t o = 0; o < views.size(); ++o) {
      ad::Var out = decode_view(tape, model, o, ad::gather_rows(joint, alignment.rows[o]), graphs[o]);
      recs.push_back(reconstruction_loss(tape, views[o].likelihood, views[o].x, out));

      // Sattolo's algorithm gives a single cycle, so no sample is paired
      // with itself.
      const std::size_t m = views[o].samples();
      std::vector<std::size_t> perm(m);
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      for (std::size_t i = m - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i)]);
      PairLists pairs;
      for (std::size_t i = 0; i < m; ++i) {
        pairs.positives.push_back({i, i});
        pairs.negatives.push_back({i, perm[i]});
      }
      cons.push_back(loss_contrastive(z[o], graphs[o], z[o], graphs[o], pairs,
                                      tape.parameter(model.modules(o).head)));
    }
    auto [loss, breakdown] = loss_total(recs, cons, config.alpha, config.beta);
    step(model, adam, tape, loss, 0);
    rec.loss = std::move(breakdown);
    for (const auto& g : graphs) rec.graph_edges += g.edge_count();
  }
  rec.peak_bytes = memory::peak_bytes() - baseline;
  rec.contrastive_evaluations = contrastive_evaluations() - evals;
  rec.wall_ms = elapsed_ms(start);
  return rec;
}

TrainResult train(std::span<const OmicsView> views, const TrainConfig& config,
                  const EpochHook& on_checkpoint, const EpochHook& on_epoch) {
  config.validate();
  if (views.empty()) throw ParameterError("train: no views given");
  const ViewAlignment alignment = align_views(views);
  const std::size_t k_s = config.k_s.resolve(alignment.samples.size());
  check_feasible(views, config, alignment.samples.size(), k_s);

  std::vector<ViewDescriptor> descriptors;
  for (const auto& v : views) descriptors.push_back(v.descriptor());
  Rng root(config.seed);
  TrainResult result{SconeModel(std::move(descriptors), config.model, root.derive(1).next_u64()), {}};
  Rng rng = root.derive(2);
  auto params = result.model.parameters();
  AdamState adam = make_adam_state(config.adam, params);

  for (std::size_t e = 0; e < config.epochs; ++e) {
    EpochRecord rec = subset_epoch(result.model, adam, views, alignment, config, k_s, rng, e);
    result.log.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec, result.model);
    if (on_checkpoint && config.checkpoint_interval > 0 && (e + 1) % config.checkpoint_interval == 0) {
      on_checkpoint(rec, result.model);
    }
  }
  return result;
}

LatentSpace infer_latent(SconeModel& model, std::span<const OmicsView> views, std::size_t k_k) {
  check_views(model, views);
  const ViewAlignment alignment = align_views(views);
  LatentSpace out;
  out.samples = alignment.samples;
  out.view_rows = alignment.rows;
  for (std::size_t o = 0; o < views.size(); ++o) {
    if (views[o].samples() < k_k + 1) {
      throw ParameterError("view '" + views[o].name + "' has too few samples for k_k = " + std::to_string(k_k));
    }
    const KnnGraph g = build_knn(views[o].x, k_k);
    out.view_latents.push_back(encode_view(model, o, views[o].x, g));
  }
  out.z = pool(out.view_latents, out.view_rows, out.samples.size());
  return out;
}

}  // namespace scone
