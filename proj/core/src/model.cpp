#include "scone/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "scone/error.hpp"

namespace scone {

namespace {
thread_local std::uint64_t t_contrastive_evaluations = 0;

ad::Parameter glorot_square(std::size_t n, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(2 * n));
  Matrix m(n, n);
  for (double& v : m.values()) v = rng.uniform(-bound, bound);
  return ad::Parameter(std::move(m));
}

void check_view(const SconeModel& model, std::size_t view) {
  if (view >= model.view_count()) {
    throw ParameterError("view index " + std::to_string(view) + " out of range (" +
                         std::to_string(model.view_count()) + " views)");
  }
}
}  // namespace

std::string to_string(Likelihood l) {
  return l == Likelihood::gaussian ? "gaussian" : "bernoulli";
}

Likelihood likelihood_from_string(const std::string& s) {
  if (s == "gaussian") return Likelihood::gaussian;
  if (s == "bernoulli") return Likelihood::bernoulli;
  throw ParameterError("unknown likelihood '" + s + "' (expected gaussian or bernoulli)");
}

SconeModel::SconeModel(std::vector<ViewDescriptor> views, ModelConfig config)
    : views_(std::move(views)), config_(config) {
  if (views_.empty()) throw ParameterError("SconeModel: at least one view is required");
  if (config_.hidden_dim == 0 || config_.latent_dim == 0) {
    throw ParameterError("SconeModel: hidden and latent widths must be positive");
  }
  for (const auto& v : views_) {
    if (v.dim == 0) throw ParameterError("SconeModel: view '" + v.name + "' has no features");
  }
}

SconeModel::SconeModel(std::vector<ViewDescriptor> views, ModelConfig config, std::uint64_t seed)
    : SconeModel(std::move(views), config) {
  Rng rng(seed);
  const std::size_t h = config_.hidden_dim;
  const std::size_t z = config_.latent_dim;
  for (const auto& v : views_) {
    ViewModules m;
    m.encoder[0] = GatLayer::glorot(v.dim, h, Activation::leaky_relu, rng);
    m.encoder[1] = GatLayer::glorot(h, z, Activation::leaky_relu, rng);
    m.decoder[0] = GatLayer::glorot(z, h, Activation::leaky_relu, rng);
    m.decoder[1] = GatLayer::glorot(h, v.dim, Activation::identity, rng);
    m.head = glorot_square(z, rng);
    for (auto* layers : {&m.encoder, &m.decoder})
      for (auto& layer : *layers) layer.slope = config_.slope;
    modules_.push_back(std::move(m));
  }
}

SconeModel SconeModel::zeros(std::vector<ViewDescriptor> views, ModelConfig config) {
  SconeModel model(std::move(views), config);
  const std::size_t h = config.hidden_dim;
  const std::size_t z = config.latent_dim;
  for (const auto& v : model.views_) {
    ViewModules m;
    m.encoder[0] = GatLayer::zeros(v.dim, h, Activation::leaky_relu);
    m.encoder[1] = GatLayer::zeros(h, z, Activation::leaky_relu);
    m.decoder[0] = GatLayer::zeros(z, h, Activation::leaky_relu);
    m.decoder[1] = GatLayer::zeros(h, v.dim, Activation::identity);
    m.head = ad::Parameter(Matrix(z, z));
    for (auto* layers : {&m.encoder, &m.decoder})
      for (auto& layer : *layers) layer.slope = config.slope;
    model.modules_.push_back(std::move(m));
  }
  return model;
}

std::vector<ad::Parameter*> SconeModel::parameters() {
  std::vector<ad::Parameter*> out;
  for (auto& m : modules_) {
    for (auto* layers : {&m.encoder, &m.decoder})
      for (auto& layer : *layers)
        for (ad::Parameter* p : layer.parameters()) out.push_back(p);
    out.push_back(&m.head);
  }
  return out;
}

std::vector<const ad::Parameter*> SconeModel::parameters() const {
  auto mut = const_cast<SconeModel*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

std::size_t SconeModel::parameter_count() const {
  std::size_t n = 0;
  for (const ad::Parameter* p : parameters()) n += p->value.size();
  return n;
}

ad::Var encode_view(ad::Tape& tape, SconeModel& model, std::size_t view, ad::Var x,
                    const KnnGraph& g) {
  check_view(model, view);
  const auto& desc = model.views()[view];
  if (x.cols() != desc.dim) {
    throw DimensionError("encode_view: view '" + desc.name + "' expects " +
                         std::to_string(desc.dim) + " features, got " + std::to_string(x.cols()));
  }
  auto& enc = model.modules(view).encoder;
  ad::Var h = gat_forward(tape, x, g, enc[0]);
  return gat_forward(tape, h, g, enc[1]);
}

Matrix encode_view(SconeModel& model, std::size_t view, const Matrix& x, const KnnGraph& g) {
  ad::Tape tape(false);
  return encode_view(tape, model, view, tape.constant(x), g).value();
}

ad::Var decode_view(ad::Tape& tape, SconeModel& model, std::size_t view, ad::Var z,
                    const KnnGraph& g) {
  check_view(model, view);
  if (z.cols() != model.latent_dim()) {
    throw DimensionError("decode_view: latent width " + std::to_string(z.cols()) +
                         " does not match the model's " + std::to_string(model.latent_dim()));
  }
  auto& dec = model.modules(view).decoder;
  ad::Var h = gat_forward(tape, z, g, dec[0]);
  return gat_forward(tape, h, g, dec[1]);
}

Matrix decode_view(SconeModel& model, std::size_t view, const Matrix& z, const KnnGraph& g) {
  ad::Tape tape(false);
  return decode_view(tape, model, view, tape.constant(z), g).value();
}

namespace {

struct PoolPlan {
  std::size_t width = 0;
  // contributors[row] = list of (term, latent row)
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> contributors;
};

PoolPlan plan_pool(std::span<const Matrix* const> latents,
                   std::span<const std::span<const std::size_t>> rows, std::size_t union_size) {
  PoolPlan plan;
  plan.contributors.resize(union_size);
  for (std::size_t t = 0; t < latents.size(); ++t) {
    const Matrix& z = *latents[t];
    if (t == 0) plan.width = z.cols();
    if (z.cols() != plan.width) throw DimensionError("pool: latent widths differ across views");
    if (rows[t].size() != z.rows()) {
      throw DimensionError("pool: view " + std::to_string(t) + " has " + std::to_string(z.rows()) +
                           " latent rows but " + std::to_string(rows[t].size()) + " row ids");
    }
    for (std::size_t r = 0; r < z.rows(); ++r) {
      const std::size_t u = rows[t][r];
      if (u >= union_size) throw DimensionError("pool: joint row index out of range");
      plan.contributors[u].push_back({t, r});
    }
  }
  for (std::size_t u = 0; u < union_size; ++u) {
    if (plan.contributors[u].empty()) {
      throw ContractError("pool: sample " + std::to_string(u) + " is missing from every view");
    }
  }
  return plan;
}

Matrix pool_values(const PoolPlan& plan, std::span<const Matrix* const> latents) {
  Matrix out(plan.contributors.size(), plan.width);
  std::vector<double> vals;
  for (std::size_t u = 0; u < plan.contributors.size(); ++u) {
    const auto& contrib = plan.contributors[u];
    auto dst = out.row(u);
    if (contrib.size() == 1) {
      auto src = latents[contrib[0].first]->row(contrib[0].second);
      std::copy(src.begin(), src.end(), dst.begin());
      continue;
    }
    for (std::size_t c = 0; c < plan.width; ++c) {
      vals.clear();
      for (const auto& [t, r] : contrib) vals.push_back((*latents[t])(r, c));
      std::sort(vals.begin(), vals.end());
      double s = 0.0;
      for (double v : vals) s += v;
      dst[c] = s;
    }
  }
  return out;
}

}  // namespace

ad::Var pool(std::span<const PoolTerm> terms, std::size_t union_size) {
  if (terms.empty()) throw ContractError("pool: no views to pool");
  ad::Tape& tape = *terms[0].latent.tape;
  std::vector<const Matrix*> latents;
  std::vector<std::span<const std::size_t>> rows;
  std::vector<ad::Var> parents;
  for (const PoolTerm& t : terms) {
    latents.push_back(&t.latent.value());
    rows.push_back(t.rows);
    parents.push_back(t.latent);
  }
  const PoolPlan plan = plan_pool(latents, rows, union_size);
  Matrix out = pool_values(plan, latents);

  std::vector<std::vector<std::size_t>> index;
  for (const PoolTerm& t : terms) index.emplace_back(t.rows.begin(), t.rows.end());
  return tape.record(std::move(out), parents,
                     [parents, index = std::move(index)](ad::Tape& t, const Matrix& g) {
                       for (std::size_t k = 0; k < parents.size(); ++k)
                         t.accumulate(parents[k], select_rows(g, index[k]));
                     });
}

Matrix pool(std::span<const Matrix> latents, std::span<const std::vector<std::size_t>> rows,
            std::size_t union_size) {
  if (latents.empty()) throw ContractError("pool: no views to pool");
  if (latents.size() != rows.size()) throw DimensionError("pool: one row map per view required");
  std::vector<const Matrix*> ptrs;
  std::vector<std::span<const std::size_t>> spans;
  for (std::size_t t = 0; t < latents.size(); ++t) {
    ptrs.push_back(&latents[t]);
    spans.emplace_back(rows[t]);
  }
  return pool_values(plan_pool(ptrs, spans, union_size), ptrs);
}

ad::Var loss_rec_mse(ad::Var x, ad::Var x_hat) { return ad::mse(x_hat, x); }

double loss_rec_mse(const Matrix& x, const Matrix& x_hat) {
  ad::Tape tape(false);
  return loss_rec_mse(tape.constant(x), tape.constant(x_hat)).value()(0, 0);
}

ad::Var loss_rec_bce(const Matrix& p, ad::Var logits) { return ad::bce_with_logits(logits, p); }

double loss_rec_bce(const Matrix& p, const Matrix& logits) {
  ad::Tape tape(false);
  return loss_rec_bce(p, tape.constant(logits)).value()(0, 0);
}

double contrastive_score(const Matrix& z1, const KnnGraph& g1, std::size_t i, const Matrix& z2,
                         const KnnGraph& g2, std::size_t j, const Matrix& head) {
  const auto n1 = neighborhood_average(z1, g1, i);
  const auto n2 = neighborhood_average(z2, g2, j);
  if (head.rows() != n1.size() || head.cols() != n2.size()) {
    throw DimensionError("contrastive_score: head " + head.shape_string() +
                         " does not match latent width " + std::to_string(n1.size()));
  }
  double s = 0.0;
  for (std::size_t r = 0; r < n1.size(); ++r) {
    double inner = 0.0;
    for (std::size_t c = 0; c < n2.size(); ++c) inner += head(r, c) * n2[c];
    s += n1[r] * inner;
  }
  return s;
}

ad::Var loss_contrastive(ad::Var z1, const KnnGraph& g1, ad::Var z2, const KnnGraph& g2,
                         const PairLists& pairs, ad::Var head) {
  if (pairs.positives.empty()) throw SamplingError("loss_contrastive: no positive pairs");
  const std::size_t total = pairs.positives.size() + pairs.negatives.size();
  std::vector<std::size_t> left, right;
  left.reserve(total);
  right.reserve(total);
  Matrix labels(total, 1);
  std::size_t r = 0;
  for (const auto& [i, j] : pairs.positives) {
    left.push_back(i);
    right.push_back(j);
    labels(r++, 0) = 1.0;
  }
  for (const auto& [i, j] : pairs.negatives) {
    left.push_back(i);
    right.push_back(j);
    ++r;
  }
  for (std::size_t k = 0; k < total; ++k) {
    if (left[k] >= g1.node_count() || right[k] >= g2.node_count()) {
      throw ParameterError("loss_contrastive: pair references a row outside its subset");
    }
  }
  ad::Var n1 = ad::neighbor_mean(z1, g1);
  ad::Var n2 = ad::neighbor_mean(z2, g2);
  ad::Var scores = ad::rowwise_dot(ad::matmul(ad::gather_rows(n1, left), head),
                                   ad::gather_rows(n2, right));
  t_contrastive_evaluations += total;
  return ad::bce_with_logits(scores, labels);
}

double loss_contrastive(const Matrix& z1, const KnnGraph& g1, const Matrix& z2,
                        const KnnGraph& g2, const PairLists& pairs, const Matrix& head) {
  ad::Tape tape(false);
  return loss_contrastive(tape.constant(z1), g1, tape.constant(z2), g2, pairs,
                          tape.constant(head))
      .value()(0, 0);
}

std::uint64_t contrastive_evaluations() noexcept { return t_contrastive_evaluations; }
void reset_contrastive_evaluations() noexcept { t_contrastive_evaluations = 0; }

LossBreakdown loss_total(std::span<const double> reconstruction,
                         std::span<const double> contrastive, double alpha, double beta) {
  LossBreakdown b;
  b.reconstruction.assign(reconstruction.begin(), reconstruction.end());
  b.contrastive.assign(contrastive.begin(), contrastive.end());
  b.alpha = alpha;
  b.beta = beta;
  double rec = 0.0;
  for (double v : reconstruction) rec += v;
  double con = 0.0;
  for (double v : contrastive) con += v;
  b.total = alpha * rec + beta * con;
  return b;
}

std::pair<ad::Var, LossBreakdown> loss_total(std::span<const ad::Var> reconstruction,
                                             std::span<const ad::Var> contrastive, double alpha,
                                             double beta) {
  if (reconstruction.empty()) throw ContractError("loss_total: no reconstruction terms");
  ad::Tape& tape = *reconstruction[0].tape;
  auto sum_terms = [&tape](std::span<const ad::Var> terms) {
    ad::Var acc = tape.constant(Matrix(1, 1, 0.0));
    for (ad::Var v : terms) acc = ad::add(acc, v);
    return acc;
  };
  ad::Var total = ad::add(ad::scale(sum_terms(reconstruction), alpha),
                          ad::scale(sum_terms(contrastive), beta));
  std::vector<double> rec, con;
  for (ad::Var v : reconstruction) rec.push_back(v.value()(0, 0));
  for (ad::Var v : contrastive) con.push_back(v.value()(0, 0));
  LossBreakdown b = loss_total(rec, con, alpha, beta);
  b.total = total.value()(0, 0);
  return {total, b};
}

}  // namespace scone
