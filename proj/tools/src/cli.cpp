#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <type_traits>
#include <unordered_map>

#include "manifest.hpp"
#include "scone/checkpoint.hpp"
#include "scone/clustering.hpp"
#include "scone/data.hpp"
#include "scone/error.hpp"
#include "scone/evaluation.hpp"
#include "scone/scaling.hpp"
#include "scone/text_io.hpp"
#include "scone/training.hpp"

#ifndef SCONE_VERSION
#define SCONE_VERSION "0.0.0"
#endif

namespace scone::cli {

namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_file(const std::string& path) {
  if (!fs::is_regular_file(path)) throw UsageError("input file not found: " + path);
}

std::vector<std::string> comma_list(const std::string& s) {
  std::vector<std::string> out;
  for (const auto& p : split(s, ',')) {
    auto t = trim(p);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

FileDigest digest_of(const fs::path& p) { return {p.string(), sha256_file(p)}; }

// Verifies and hashes every input before the command runs.
std::vector<FileDigest> check_inputs(const std::vector<std::string>& paths) {
  std::vector<FileDigest> out;
  for (const auto& p : paths) {
    require_file(p);
    verify_input(p);
    out.push_back(digest_of(p));
  }
  return out;
}

void write_manifest(const fs::path& where, RunManifest m) {
  m.tool_version = SCONE_VERSION;
  write_file_atomic(where, m.to_json());
}

std::string format_embedding(const LatentSpace& latent) {
  std::string out = "sample_id";
  for (std::size_t c = 0; c < latent.z.cols(); ++c) out += "\tz" + std::to_string(c);
  out += '\n';
  for (std::size_t r = 0; r < latent.z.rows(); ++r) {
    out += latent.samples[r];
    for (double v : latent.z.row(r)) {
      out += '\t';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

std::string format_epoch(const EpochRecord& e) {
  nlohmann::ordered_json j;
  j["epoch"] = e.epoch;
  j["reconstruction"] = e.loss.reconstruction;
  j["contrastive"] = e.loss.contrastive;
  j["alpha"] = e.loss.alpha;
  j["beta"] = e.loss.beta;
  j["total"] = e.loss.total;
  j["wall_ms"] = e.wall_ms;
  j["peak_bytes"] = e.peak_bytes;
  j["contrastive_evaluations"] = e.contrastive_evaluations;
  j["overlap"] = e.overlap;
  return j.dump() + "\n";
}

// ---- synth ---------------------------------------------------------------

struct SynthArgs {
  std::string spec;
  std::string out;
  std::optional<std::uint64_t> seed;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  auto inputs = check_inputs({a.spec});
  SyntheticSpec spec = load_synthetic_spec(a.spec);
  if (a.seed) spec.seed = *a.seed;
  const SyntheticData data = generate_synthetic(spec);
  fs::create_directories(a.out);
  const fs::path dir(a.out);

  RunManifest m;
  m.command = "synth";
  m.seed = std::to_string(spec.seed);
  m.config["spec"] = a.spec;
  m.inputs = std::move(inputs);
  std::vector<std::pair<fs::path, std::string>> files;
  for (const auto& v : data.views) files.push_back({dir / (v.name + ".tsv"), format_view(v)});
  files.push_back({dir / "labels.tsv", format_labels(data.sample_ids, data.labels)});
  files.push_back({dir / "survival.tsv", format_survival(data.survival)});
  for (const auto& [path, content] : files) {
    write_file_atomic(path, content);
    m.outputs.push_back({path.filename().string(), sha256_bytes(content)});
  }
  write_manifest(dir / "manifest.json", m);
  out << "wrote " << data.views.size() << " views, " << data.sample_ids.size() << " samples to " << a.out << "\n";
  return 0;
}

// ---- preprocess ----------------------------------------------------------

struct PreprocessArgs {
  std::string in;
  std::string steps;
  std::string out;
  std::string likelihood = "gaussian";
};

int cmd_preprocess(const PreprocessArgs& a, std::ostream& out) {
  auto inputs = check_inputs({a.in});
  const auto steps = comma_list(a.steps);
  if (steps.empty()) throw UsageError("--steps needs at least one of counts[:target], clr, zscore");
  // Validate the whole list before touching data.
  std::vector<std::pair<std::string, double>> plan;
  for (const auto& s : steps) {
    if (s == "clr" || s == "zscore") {
      plan.push_back({s, 0.0});
    } else if (s == "counts" || s.rfind("counts:", 0) == 0) {
      double target = 1e4;
      if (s.size() > 6) {
        try {
          target = parse_double(s.substr(7));
        } catch (const ParseError&) {
          throw UsageError("bad counts target in step '" + s + "'");
        }
      }
      plan.push_back({"counts", target});
    } else {
      throw UsageError("unknown preprocessing step '" + s + "'");
    }
  }
  OmicsView v = load_view(a.in, likelihood_from_string(a.likelihood));
  for (const auto& [step, target] : plan) {
    if (step == "counts") v = normalize_counts(std::move(v), target);
    else if (step == "clr") v = clr_transform(std::move(v));
    else v = zscore(std::move(v));
  }
  const std::string content = format_view(v);
  write_file_atomic(a.out, content);
  RunManifest m;
  m.command = "preprocess";
  m.config["steps"] = a.steps;
  m.config["likelihood"] = a.likelihood;
  m.inputs = std::move(inputs);
  m.outputs.push_back({fs::path(a.out).string(), sha256_bytes(content)});
  write_manifest(manifest_path_for(a.out), m);
  out << "wrote " << a.out << " (" << v.samples() << " x " << v.features() << ")\n";
  return 0;
}

// ---- train ---------------------------------------------------------------

struct TrainArgs {
  std::vector<std::string> views;
  std::string likelihoods;
  std::string config;
  std::string out;
  std::string log;
  std::map<std::string, std::string> overrides;
};

std::vector<Likelihood> parse_likelihoods(const std::string& s, std::size_t count) {
  std::vector<Likelihood> out(count, Likelihood::gaussian);
  if (s.empty()) return out;
  const auto parts = comma_list(s);
  if (parts.size() != count) {
    throw UsageError("--likelihood lists " + std::to_string(parts.size()) + " entries for " +
                     std::to_string(count) + " views");
  }
  for (std::size_t i = 0; i < count; ++i) {
    try {
      out[i] = likelihood_from_string(parts[i]);
    } catch (const ParameterError& e) {
      throw UsageError(e.what());
    }
  }
  return out;
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
  std::vector<std::string> all_inputs = a.views;
  if (!a.config.empty()) all_inputs.push_back(a.config);
  auto inputs = check_inputs(all_inputs);
  const auto liks = parse_likelihoods(a.likelihoods, a.views.size());

  KeyValueConfig kv = a.config.empty() ? KeyValueConfig{} : KeyValueConfig::load(a.config);
  for (const auto& [k, v] : a.overrides) kv.set(k, v);
  const TrainConfig config = train_config_from(kv);

  std::vector<OmicsView> views;
  for (std::size_t i = 0; i < a.views.size(); ++i) views.push_back(load_view(a.views[i], liks[i]));

  const std::string log_path = a.log.empty() ? a.out + ".log.jsonl" : a.log;
  std::string log;
  auto metadata = to_key_values(config);
  auto save = [&](const fs::path& path, const SconeModel& model) {
    std::ostringstream ss;
    write_checkpoint(ss, model, metadata);
    write_file_atomic(path, ss.str());
    return ss.str();
  };
  TrainResult result = train(
      views, config,
      [&](const EpochRecord& e, const SconeModel& model) {
        save(a.out + ".epoch" + std::to_string(e.epoch + 1), model);
      },
      [&](const EpochRecord& e, const SconeModel&) { log += format_epoch(e); });

  const std::string checkpoint = save(a.out, result.model);
  write_file_atomic(log_path, log);

  RunManifest m;
  m.command = "train";
  m.config = metadata;
  m.seed = std::to_string(config.seed);
  m.inputs = std::move(inputs);
  m.outputs.push_back({a.out, sha256_bytes(checkpoint)});
  m.outputs.push_back({log_path, sha256_bytes(log)});
  write_manifest(manifest_path_for(a.out), m);
  const auto& first = result.log.epochs.front().loss;
  const auto& last = result.log.epochs.back().loss;
  out << "trained " << result.log.epochs.size() << " epochs; total loss " << format_double(first.total)
      << " -> " << format_double(last.total) << "\n";
  return 0;
}

// ---- embed ---------------------------------------------------------------

struct EmbedArgs {
  std::string checkpoint;
  std::vector<std::string> views;
  std::string out;
  std::optional<std::size_t> k_k;
};

int cmd_embed(const EmbedArgs& a, std::ostream& out) {
  std::vector<std::string> all_inputs = a.views;
  all_inputs.insert(all_inputs.begin(), a.checkpoint);
  auto inputs = check_inputs(all_inputs);
  Checkpoint ck = load_checkpoint(a.checkpoint);
  if (a.views.size() != ck.model.view_count()) {
    throw DimensionError("checkpoint has " + std::to_string(ck.model.view_count()) + " views, " +
                         std::to_string(a.views.size()) + " view files given");
  }
  std::vector<OmicsView> views;
  for (std::size_t i = 0; i < a.views.size(); ++i) {
    views.push_back(load_view(a.views[i], ck.model.views()[i].likelihood));
  }
  std::size_t k_k = 15;
  if (a.k_k) {
    k_k = *a.k_k;
  } else if (auto it = ck.metadata.find("k_k"); it != ck.metadata.end()) {
    k_k = parse_size(it->second);
  }
  const LatentSpace latent = infer_latent(ck.model, views, k_k);
  const std::string content = format_embedding(latent);
  write_file_atomic(a.out, content);
  RunManifest m;
  m.command = "embed";
  m.config["k_k"] = std::to_string(k_k);
  m.inputs = std::move(inputs);
  m.outputs.push_back({a.out, sha256_bytes(content)});
  write_manifest(manifest_path_for(a.out), m);
  out << "embedded " << latent.samples.size() << " samples into " << latent.z.cols() << " dimensions\n";
  return 0;
}

// ---- cluster -------------------------------------------------------------

struct ClusterArgs {
  std::string embedding;
  bool best = false;
  std::optional<std::size_t> target_k;
  std::uint64_t seed = 0;
  std::size_t k_k = 15;
  std::size_t threads = 0;
  std::string out;
};

int cmd_cluster(const ClusterArgs& a, std::ostream& out) {
  auto inputs = check_inputs({a.embedding});
  const OmicsView emb = load_view(a.embedding, Likelihood::gaussian);
  const auto g = knn_graph(emb.x, a.k_k);
  Rng rng(a.seed);
  const auto selection = a.target_k ? SweepSelection::target(*a.target_k) : SweepSelection::best();
  const SweepResult sweep = resolution_sweep(g, selection, rng, a.threads);
  const std::string content = format_partition(emb.sample_ids, sweep.best);
  write_file_atomic(a.out, content);
  RunManifest m;
  m.command = "cluster";
  m.seed = std::to_string(a.seed);
  m.config["k_k"] = std::to_string(a.k_k);
  m.config["selection"] = a.target_k ? "target-k" : "best-modularity";
  if (a.target_k) m.config["target_k"] = std::to_string(*a.target_k);
  m.config["resolution"] = format_double(sweep.best.resolution);
  m.inputs = std::move(inputs);
  m.outputs.push_back({a.out, sha256_bytes(content)});
  write_manifest(manifest_path_for(a.out), m);
  out << sweep.best.communities << " clusters at resolution " << format_double(sweep.best.resolution)
      << " (modularity " << format_double(sweep.best.modularity) << ")\n";
  return 0;
}

// ---- evaluate ------------------------------------------------------------

struct EvaluateArgs {
  std::string partition;
  std::string truth;
  std::string survival;
  std::string out;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  if (a.truth.empty() && a.survival.empty()) throw UsageError("evaluate needs --truth and/or --survival");
  std::vector<std::string> all_inputs{a.partition};
  if (!a.truth.empty()) all_inputs.push_back(a.truth);
  if (!a.survival.empty()) all_inputs.push_back(a.survival);
  auto inputs = check_inputs(all_inputs);

  const LabelTable part = load_labels(a.partition);
  std::unordered_map<std::string, std::uint32_t> cluster_of;
  for (std::size_t i = 0; i < part.ids.size(); ++i) cluster_of[part.ids[i]] = part.labels[i];

  nlohmann::ordered_json doc;
  doc["samples"] = part.ids.size();
  if (!a.truth.empty()) {
    const LabelTable truth = load_labels(a.truth);
    std::vector<std::uint32_t> predicted, actual;
    for (std::size_t i = 0; i < truth.ids.size(); ++i) {
      auto it = cluster_of.find(truth.ids[i]);
      if (it == cluster_of.end()) continue;
      predicted.push_back(it->second);
      actual.push_back(truth.labels[i]);
    }
    doc["matched_samples"] = predicted.size();
    doc["ari"] = ari(predicted, actual);
    doc["ami"] = ami(predicted, actual);
  }
  if (!a.survival.empty()) {
    std::vector<SurvivalRecord> records;
    for (auto r : load_survival(a.survival)) {
      auto it = cluster_of.find(r.sample_id);
      if (it == cluster_of.end()) continue;
      r.group = it->second;
      records.push_back(std::move(r));
    }
    const LogrankResult lr = logrank(records);
    doc["logrank"] = {{"samples", records.size()},
                      {"statistic", lr.statistic},
                      {"dof", lr.dof},
                      {"p_value", lr.p_value},
                      {"neg_log10_p", lr.neg_log10_p}};
  }
  const std::string content = doc.dump(2) + "\n";
  write_file_atomic(a.out, content);
  RunManifest m;
  m.command = "evaluate";
  m.inputs = std::move(inputs);
  m.outputs.push_back({a.out, sha256_bytes(content)});
  write_manifest(manifest_path_for(a.out), m);
  out << content;
  return 0;
}

// ---- bench ---------------------------------------------------------------

struct BenchArgs {
  std::string n_list = "1000,2000,4000";
  std::string ks = "half";
  std::size_t reps = 3;
  std::size_t k_k = 15;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  ScalingOptions opt;
  opt.n_list.clear();
  try {
    for (const auto& s : comma_list(a.n_list)) opt.n_list.push_back(parse_size(s));
    opt.ks = KsRule::parse(a.ks);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  opt.reps = a.reps;
  opt.k_k = a.k_k;
  opt.seed = a.seed;
  const auto records = run_scaling(opt);
  const std::string content = format_scaling(records);
  write_file_atomic(a.out, content);
  RunManifest m;
  m.command = "bench";
  m.seed = std::to_string(a.seed);
  m.config = {{"n", a.n_list}, {"ks", a.ks}, {"reps", std::to_string(a.reps)}, {"k_k", std::to_string(a.k_k)}};
  m.outputs.push_back({a.out, sha256_bytes(content)});
  write_manifest(manifest_path_for(a.out), m);
  out << content;
  for (std::size_t i = 0; i + 1 < records.size(); i += 2) {
    const auto& full = records[i];
    const auto& sub = records[i + 1];
    if (full.failed || sub.failed) continue;
    out << "n=" << full.n << " peak ratio subset/full = "
        << format_double(static_cast<double>(sub.peak_bytes) / static_cast<double>(full.peak_bytes)) << "\n";
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Subset-contrastive multi-omics graph autoencoder", "scone"};
  app.require_subcommand(1);
  app.set_version_flag("--version", SCONE_VERSION);
  auto unsigned_seed = CLI::NonNegativeNumber;

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic multi-view data set");
  c_synth->add_option("--spec", synth.spec, "Synthetic spec (key = value file)")->required();
  c_synth->add_option("--out", synth.out, "Output directory")->required();
  c_synth->add_option("--seed", synth.seed, "Override the spec's seed")->check(unsigned_seed);

  PreprocessArgs pre;
  auto* c_pre = app.add_subcommand("preprocess", "Apply preprocessing steps to a view file");
  c_pre->add_option("--in", pre.in, "Input view file")->required();
  c_pre->add_option("--steps", pre.steps, "Ordered comma list of counts[:target], clr, zscore")->required();
  c_pre->add_option("--out", pre.out, "Output view file")->required();
  c_pre->add_option("--likelihood", pre.likelihood, "gaussian or bernoulli")
      ->check(CLI::IsMember({"gaussian", "bernoulli"}));

  TrainArgs tr;
  std::optional<std::size_t> epochs, k_k, hidden, latent, interval;
  std::optional<std::uint64_t> tr_seed;
  std::optional<std::string> k_s;
  std::optional<double> lr, alpha, beta, overlap;
  auto* c_train = app.add_subcommand("train", "Train a model on one or more view files");
  c_train->add_option("views", tr.views, "View files (tab or comma separated)")->required();
  c_train->add_option("--likelihood", tr.likelihoods, "Comma list, one per view (default gaussian)");
  c_train->add_option("--config", tr.config, "Training config (key = value file); flags override it");
  c_train->add_option("--out", tr.out, "Checkpoint path")->required();
  c_train->add_option("--log", tr.log, "Training log path (default <out>.log.jsonl)");
  c_train->add_option("--epochs", epochs, "Number of epochs");
  c_train->add_option("--seed", tr_seed, "Random seed")->check(unsigned_seed);
  c_train->add_option("--k-s", k_s, "Subset size: count, or fraction of n such as 0.2");
  c_train->add_option("--k-k", k_k, "Neighbours per node in KNN graphs");
  c_train->add_option("--learning-rate", lr, "Adam learning rate");
  c_train->add_option("--alpha", alpha, "Reconstruction weight");
  c_train->add_option("--beta", beta, "Contrastive weight");
  c_train->add_option("--min-overlap", overlap, "Minimum subset overlap fraction");
  c_train->add_option("--hidden-dim", hidden, "Hidden layer width");
  c_train->add_option("--latent-dim", latent, "Latent width");
  c_train->add_option("--checkpoint-interval", interval, "Write <out>.epochN every N epochs");

  EmbedArgs emb;
  auto* c_embed = app.add_subcommand("embed", "Write the joint latent embedding of view files");
  c_embed->add_option("--checkpoint", emb.checkpoint, "Trained checkpoint")->required();
  c_embed->add_option("views", emb.views, "View files, in training order")->required();
  c_embed->add_option("--out", emb.out, "Embedding table path")->required();
  c_embed->add_option("--k-k", emb.k_k, "Neighbours per node (default: value used in training)");

  ClusterArgs cl;
  auto* c_cluster = app.add_subcommand("cluster", "Louvain resolution sweep on an embedding");
  c_cluster->add_option("--embedding", cl.embedding, "Embedding table")->required();
  auto* best_flag = c_cluster->add_flag("--best-modularity", cl.best, "Select the highest-modularity partition (default)");
  c_cluster->add_option("--target-k", cl.target_k, "Only accept partitions with exactly K clusters")->excludes(best_flag);
  c_cluster->add_option("--seed", cl.seed, "Random seed")->check(unsigned_seed);
  c_cluster->add_option("--k-k", cl.k_k, "Neighbours per node in the latent KNN graph");
  c_cluster->add_option("--threads", cl.threads, "Sweep threads (default: SCONE_THREADS or 1)");
  c_cluster->add_option("--out", cl.out, "Partition path")->required();

  EvaluateArgs ev;
  auto* c_eval = app.add_subcommand("evaluate", "Score a partition against labels and/or survival");
  c_eval->add_option("--partition", ev.partition, "Partition file")->required();
  c_eval->add_option("--truth", ev.truth, "Ground-truth labels (sample_id, label)");
  c_eval->add_option("--survival", ev.survival, "Survival table (sample_id, duration, event, group)");
  c_eval->add_option("--out", ev.out, "Metrics document path")->required();

  BenchArgs bench;
  auto* c_bench = app.add_subcommand("bench", "Peak memory and time of subset vs full-graph epochs");
  c_bench->add_option("--n", bench.n_list, "Comma list of sample counts, ascending");
  c_bench->add_option("--ks", bench.ks, "'half' or a fraction of n");
  c_bench->add_option("--reps", bench.reps, "Repetitions per point (>= 3)");
  c_bench->add_option("--k-k", bench.k_k, "Neighbours per node");
  c_bench->add_option("--seed", bench.seed, "Random seed")->check(unsigned_seed);
  c_bench->add_option("--out", bench.out, "Output table path")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << SCONE_VERSION << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "scone: " << e.what() << "\n";
    return 2;
  }

  try {
    if (c_synth->parsed()) return cmd_synth(synth, out);
    if (c_pre->parsed()) return cmd_preprocess(pre, out);
    if (c_train->parsed()) {
      auto put = [&](const char* key, const auto& v) {
        if (v) {
          if constexpr (std::is_same_v<std::decay_t<decltype(*v)>, double>) tr.overrides[key] = format_double(*v);
          else if constexpr (std::is_same_v<std::decay_t<decltype(*v)>, std::string>) tr.overrides[key] = *v;
          else tr.overrides[key] = std::to_string(*v);
        }
      };
      put("epochs", epochs);
      put("seed", tr_seed);
      put("k_s", k_s);
      put("k_k", k_k);
      put("learning_rate", lr);
      put("alpha", alpha);
      put("beta", beta);
      put("min_overlap", overlap);
      put("hidden_dim", hidden);
      put("latent_dim", latent);
      put("checkpoint_interval", interval);
      return cmd_train(tr, out);
    }
    if (c_embed->parsed()) return cmd_embed(emb, out);
    if (c_cluster->parsed()) return cmd_cluster(cl, out);
    if (c_eval->parsed()) return cmd_evaluate(ev, out);
    if (c_bench->parsed()) return cmd_bench(bench, out);
  } catch (const UsageError& e) {
    err << "scone: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "scone: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace scone::cli
