#include "scone/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <new>
#include <set>

#include "scone/data.hpp"
#include "scone/error.hpp"
#include "scone/text_io.hpp"
#include "scone/training.hpp"

namespace scone {

std::string to_string(ScalingMode m) { return m == ScalingMode::subset_pair ? "subset-pair" : "full-graph"; }

std::size_t KsRule::resolve(std::size_t n) const {
  if (half) return n / 2;
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
}

KsRule KsRule::parse(const std::string& s) {
  if (trim(s) == "half") return {};
  const double f = parse_double(s);
  if (!(f > 0.0 && f < 1.0)) throw ParameterError("k_s rule must be 'half' or a fraction in (0, 1)");
  return {false, f};
}

namespace {

template <class T>
T median(std::vector<T> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  if (v.size() % 2) return v[m];
  return static_cast<T>((v[m - 1] + v[m]) / 2);
}

ScalingRecord measure(ScalingMode mode, std::size_t n, std::size_t k_s, const SconeModel& initial,
                      std::span<const OmicsView> views, const ViewAlignment& alignment,
                      const TrainConfig& config, std::size_t reps, std::uint64_t seed) {
  ScalingRecord rec;
  rec.n = n;
  rec.k_s = mode == ScalingMode::subset_pair ? k_s : n;
  rec.mode = mode;
  std::vector<std::size_t> peaks;
  std::vector<double> times;
  try {
    for (std::size_t r = 0; r < reps; ++r) {
      SconeModel model = initial;
      auto params = model.parameters();
      AdamState adam = make_adam_state(config.adam, params);
      Rng rng = Rng(seed).derive(r);
      const EpochRecord e = mode == ScalingMode::subset_pair
                                ? subset_epoch(model, adam, views, alignment, config, k_s, rng)
                                : full_graph_epoch(model, adam, views, alignment, config, rng);
      peaks.push_back(e.peak_bytes);
      times.push_back(e.wall_ms);
      if (r == 0) {
        rec.contrastive_evaluations = e.contrastive_evaluations;
        rec.graph_edges = e.graph_edges;
      }
    }
    rec.peak_bytes = median(peaks);
    rec.epoch_ms = median(times);
  } catch (const std::bad_alloc&) {
    rec.failed = true;
    rec.error = "allocation failure";
  } catch (const Error& e) {
    rec.failed = true;
    rec.error = e.what();
  }
  return rec;
}

}  // namespace

std::vector<ScalingRecord> run_scaling(const ScalingOptions& options) {
  if (options.reps < 3) throw ParameterError("run_scaling: at least 3 repetitions are required");
  if (options.n_list.empty()) throw ParameterError("run_scaling: empty n list");
  for (std::size_t i = 1; i < options.n_list.size(); ++i) {
    if (options.n_list[i] <= options.n_list[i - 1]) throw ParameterError("run_scaling: n list must be strictly ascending");
  }
  if (options.view_dims.empty()) throw ParameterError("run_scaling: at least one view is required");

  std::vector<ScalingRecord> out;
  for (std::size_t n : options.n_list) {
    SyntheticSpec spec;
    spec.n = n;
    spec.clusters = 3;
    spec.seed = Rng(options.seed).derive(n).next_u64();
    for (std::size_t o = 0; o < options.view_dims.size(); ++o) {
      SyntheticViewSpec v;
      v.name = "view" + std::to_string(o);
      v.dim = options.view_dims[o];
      spec.views.push_back(v);
    }
    const SyntheticData data = generate_synthetic(spec);
    const ViewAlignment alignment = align_views(data.views);

    TrainConfig config;
    config.k_k = options.k_k;
    config.model = options.model;
    config.seed = options.seed;
    std::vector<ViewDescriptor> desc;
    for (const auto& v : data.views) desc.push_back(v.descriptor());
    const SconeModel initial(desc, options.model, options.seed);
    const std::size_t k_s = options.ks.resolve(n);

    out.push_back(measure(ScalingMode::full_graph, n, k_s, initial, data.views, alignment, config,
                          options.reps, options.seed));
    out.push_back(measure(ScalingMode::subset_pair, n, k_s, initial, data.views, alignment, config,
                          options.reps, options.seed));
  }
  return out;
}

double fit_exponent(std::span<const ScalingRecord> records, ScalingField field) {
  std::vector<double> xs, ys;
  std::set<std::size_t> distinct;
  for (const auto& r : records) {
    if (r.failed) continue;
    double v = 0.0;
    switch (field) {
      case ScalingField::peak_bytes: v = static_cast<double>(r.peak_bytes); break;
      case ScalingField::epoch_ms: v = r.epoch_ms; break;
      case ScalingField::contrastive_evaluations: v = static_cast<double>(r.contrastive_evaluations); break;
      case ScalingField::graph_edges: v = static_cast<double>(r.graph_edges); break;
    }
    if (!(v > 0.0) || r.n == 0) throw ParameterError("fit_exponent: values and n must be positive");
    xs.push_back(std::log(static_cast<double>(r.n)));
    ys.push_back(std::log(v));
    distinct.insert(r.n);
  }
  if (distinct.size() < 3) throw ParameterError("fit_exponent: need at least three distinct n");
  if (std::all_of(ys.begin(), ys.end(), [&](double y) { return y == ys.front(); })) {
    throw UndefinedError("fit_exponent: field is constant");
  }
  const double k = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= k;
  my /= k;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxy / sxx;
}

std::string format_scaling(std::span<const ScalingRecord> records) {
  std::string out = "n\tk_s\tmode\tpeak_bytes\tepoch_ms\tcontrastive_evaluations\tgraph_edges\tstatus\n";
  for (const auto& r : records) {
    out += std::to_string(r.n) + "\t" + std::to_string(r.k_s) + "\t" + to_string(r.mode) + "\t" +
           std::to_string(r.peak_bytes) + "\t" + format_double(r.epoch_ms) + "\t" +
           std::to_string(r.contrastive_evaluations) + "\t" + std::to_string(r.graph_edges) + "\t" +
           (r.failed ? "failed: " + r.error : std::string("ok")) + "\n";
  }
  return out;
}

}  // namespace scone
