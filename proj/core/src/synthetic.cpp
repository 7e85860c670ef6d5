#include <cmath>
#include <fstream>
#include <numeric>

#include "scone/data.hpp"
#include "scone/error.hpp"
#include "scone/rng.hpp"
#include "scone/tape.hpp"
#include "scone/text_io.hpp"

namespace scone {

void SyntheticSpec::validate() const {
  if (n < 2) throw ParameterError("synthetic spec: n must be at least 2");
  if (clusters < 1) throw ParameterError("synthetic spec: at least one cluster is required");
  if (!proportions.empty()) {
    if (proportions.size() != clusters) {
      throw ParameterError("synthetic spec: " + std::to_string(proportions.size()) +
                           " proportions for " + std::to_string(clusters) + " clusters");
    }
    double s = 0.0;
    for (double p : proportions) {
      if (!(p >= 0.0)) throw ParameterError("synthetic spec: proportions must be non-negative");
      s += p;
    }
    if (std::abs(s - 1.0) > 1e-9) throw ParameterError("synthetic spec: proportions must sum to 1");
  }
  if (views.empty()) throw ParameterError("synthetic spec: at least one view is required");
  for (const auto& v : views) {
    const std::string who = "synthetic view '" + v.name + "': ";
    if (v.name.empty()) throw ParameterError("synthetic spec: view without a name");
    if (v.dim == 0) throw ParameterError(who + "dim must be positive");
    if (!(v.separation >= 0.0)) throw ParameterError(who + "separation must be non-negative");
    if (!(v.noise > 0.0)) throw ParameterError(who + "noise must be positive");
    if (!(v.informative_fraction >= 0.0 && v.informative_fraction <= 1.0)) {
      throw ParameterError(who + "informative fraction must lie in [0, 1]");
    }
    if (!(v.missing_fraction >= 0.0 && v.missing_fraction < 1.0)) {
      throw ParameterError(who + "missing fraction must lie in [0, 1)");
    }
    if (!v.cluster_map.empty() && v.cluster_map.size() != clusters) {
      throw ParameterError(who + "cluster_map needs one entry per cluster");
    }
  }
  if (!(base_hazard > 0.0) || !(hazard_ratio > 0.0)) {
    throw ParameterError("synthetic spec: hazards must be positive");
  }
  if (!(censor_fraction >= 0.0 && censor_fraction <= 1.0)) {
    throw ParameterError("synthetic spec: censor fraction must lie in [0, 1]");
  }
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  Rng label_rng = rng.derive(1);
  Rng survival_rng = rng.derive(2);

  std::vector<double> cumulative(spec.clusters);
  for (std::size_t c = 0; c < spec.clusters; ++c) {
    const double p = spec.proportions.empty() ? 1.0 / static_cast<double>(spec.clusters)
                                              : spec.proportions[c];
    cumulative[c] = (c ? cumulative[c - 1] : 0.0) + p;
  }
  std::vector<std::uint32_t> labels(spec.n);
  for (auto& l : labels) {
    const double u = label_rng.uniform() * cumulative.back();
    std::size_t c = 0;
    while (c + 1 < spec.clusters && u >= cumulative[c]) ++c;
    l = static_cast<std::uint32_t>(c);
  }

  const int width = static_cast<int>(std::to_string(spec.n - 1).size());
  std::vector<std::string> all_ids(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    std::string num = std::to_string(i);
    all_ids[i] = "S" + std::string(static_cast<std::size_t>(width) - num.size(), '0') + num;
  }

  std::vector<std::vector<bool>> present(spec.views.size(), std::vector<bool>(spec.n, true));
  std::vector<Matrix> full;
  for (std::size_t o = 0; o < spec.views.size(); ++o) {
    const auto& vs = spec.views[o];
    Rng view_rng = rng.derive(100 + o);
    const std::size_t informative = static_cast<std::size_t>(
        std::lround(vs.informative_fraction * static_cast<double>(vs.dim)));
    std::size_t groups = 0;
    std::vector<std::size_t> map(spec.clusters);
    for (std::size_t c = 0; c < spec.clusters; ++c) {
      map[c] = vs.cluster_map.empty() ? c : vs.cluster_map[c];
      groups = std::max(groups, map[c] + 1);
    }
    Matrix means(groups, informative);
    for (double& m : means.values()) m = vs.separation * vs.noise * view_rng.normal();

    Matrix x(spec.n, vs.dim);
    for (std::size_t i = 0; i < spec.n; ++i) {
      const std::size_t g = map[labels[i]];
      for (std::size_t j = 0; j < vs.dim; ++j) {
        double v = vs.noise * view_rng.normal();
        if (j < informative) v += means(g, j);
        x(i, j) = vs.likelihood == Likelihood::bernoulli ? ad::sigmoid(v) : v;
      }
    }
    for (std::size_t i = 0; i < spec.n; ++i) present[o][i] = !(view_rng.uniform() < vs.missing_fraction);
    full.push_back(std::move(x));
  }

  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < spec.n; ++i) {
    bool any = false;
    for (const auto& p : present) any = any || p[i];
    if (any) kept.push_back(i);
  }

  SyntheticData out;
  for (std::size_t o = 0; o < spec.views.size(); ++o) {
    const auto& vs = spec.views[o];
    OmicsView v;
    v.name = vs.name;
    v.likelihood = vs.likelihood;
    for (std::size_t j = 0; j < vs.dim; ++j) v.feature_names.push_back("f" + std::to_string(j));
    std::vector<std::size_t> rows;
    for (std::size_t i : kept) {
      if (!present[o][i]) continue;
      rows.push_back(i);
      v.sample_ids.push_back(all_ids[i]);
    }
    v.x = select_rows(full[o], rows);
    out.views.push_back(std::move(v));
  }

  std::vector<SurvivalRecord> survival(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const double rate = spec.base_hazard * std::pow(spec.hazard_ratio, static_cast<double>(labels[i]));
    SurvivalRecord& r = survival[i];
    r.sample_id = all_ids[i];
    r.duration = survival_rng.exponential(rate);
    r.event = true;
    r.group = labels[i];
  }
  for (std::size_t i = 0; i < spec.n; ++i) {
    if (survival_rng.uniform() < spec.censor_fraction) {
      survival[i].event = false;
      survival[i].duration *= survival_rng.uniform();
    }
  }

  for (std::size_t i : kept) {
    out.sample_ids.push_back(all_ids[i]);
    out.labels.push_back(labels[i]);
    out.survival.push_back(survival[i]);
  }
  return out;
}

namespace {
std::vector<std::string> list_of(const std::string& s) {
  std::vector<std::string> out;
  for (const auto& part : split(s, ',')) {
    auto t = trim(part);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}
}  // namespace

SyntheticSpec parse_synthetic_spec(std::istream& in) {
  const KeyValueConfig cfg = KeyValueConfig::parse(in);
  SyntheticSpec spec;
  spec.n = cfg.get_size("n", spec.n);
  spec.clusters = cfg.get_size("clusters", spec.clusters);
  spec.seed = cfg.get_size("seed", spec.seed);
  spec.base_hazard = cfg.get_double("base_hazard", spec.base_hazard);
  spec.hazard_ratio = cfg.get_double("hazard_ratio", spec.hazard_ratio);
  spec.censor_fraction = cfg.get_double("censor_fraction", spec.censor_fraction);
  for (const auto& p : list_of(cfg.get_string("proportions", ""))) spec.proportions.push_back(parse_double(p));
  auto names = list_of(cfg.get_string("views", "rna,protein"));
  for (const auto& name : names) {
    SyntheticViewSpec v;
    v.name = name;
    v.dim = cfg.get_size(name + ".dim", v.dim);
    v.separation = cfg.get_double(name + ".separation", v.separation);
    v.noise = cfg.get_double(name + ".noise", v.noise);
    v.informative_fraction = cfg.get_double(name + ".informative", v.informative_fraction);
    v.missing_fraction = cfg.get_double(name + ".missing", v.missing_fraction);
    v.likelihood = likelihood_from_string(cfg.get_string(name + ".likelihood", "gaussian"));
    for (const auto& c : list_of(cfg.get_string(name + ".cluster_map", ""))) v.cluster_map.push_back(parse_size(c));
    spec.views.push_back(std::move(v));
  }
  spec.validate();
  return spec;
}

SyntheticSpec load_synthetic_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return parse_synthetic_spec(in);
}

}  // namespace scone
