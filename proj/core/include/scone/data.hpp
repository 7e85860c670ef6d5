#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "scone/evaluation.hpp"
#include "scone/matrix.hpp"
#include "scone/model.hpp"

namespace scone {

enum class Preprocessing { raw, normalized, zscored };

std::string to_string(Preprocessing p);

struct OmicsView {
  std::string name;
  std::vector<std::string> sample_ids;
  std::vector<std::string> feature_names;
  Matrix x;
  Likelihood likelihood = Likelihood::gaussian;
  Preprocessing state = Preprocessing::raw;

  std::size_t samples() const noexcept { return x.rows(); }
  std::size_t features() const noexcept { return x.cols(); }
  ViewDescriptor descriptor() const { return {name, x.cols(), likelihood}; }

  // Throws ContractError when ids are duplicated or dims disagree.
  void validate() const;
};

// Delimited text, first column sample id, header row of feature names. The
// view name defaults to the file stem. Throws ParseError with the line
// number on ragged rows, duplicate ids, unparsable or NaN cells.
OmicsView read_view(std::istream& in, Likelihood likelihood, const std::string& name);
OmicsView load_view(const std::filesystem::path& path, Likelihood likelihood);
// Values are written in shortest round-trip form, so load(save(v)) == v.
std::string format_view(const OmicsView& view, char delimiter = '\t');
void save_view(const std::filesystem::path& path, const OmicsView& view);

// Row scaled to sum `target_sum`, then log1p. All-zero rows stay zero.
// Throws DomainError on negative entries.
OmicsView normalize_counts(OmicsView view, double target_sum = 1e4);
// log(x + 1) minus its row mean. Throws DomainError on negative entries.
OmicsView clr_transform(OmicsView view);
// Per column: subtract the mean and divide by the population standard
// deviation; zero-variance columns become zeros.
OmicsView zscore(OmicsView view);

struct SyntheticViewSpec {
  std::string name;
  std::size_t dim = 50;
  double separation = 4.0;  // cluster-mean scale in units of noise
  double noise = 1.0;
  double informative_fraction = 0.2;
  double missing_fraction = 0.0;
  Likelihood likelihood = Likelihood::gaussian;
  // cluster -> group seen by this view; empty means every cluster is its
  // own group. Lets views disagree on which clusters they can tell apart.
  std::vector<std::size_t> cluster_map;
};

struct SyntheticSpec {
  std::size_t n = 300;
  std::size_t clusters = 3;
  std::vector<double> proportions;  // empty: equal
  std::vector<SyntheticViewSpec> views;
  double base_hazard = 0.1;
  double hazard_ratio = 3.0;  // cluster c has rate base * ratio^c
  double censor_fraction = 0.2;
  std::uint64_t seed = 0;

  // Throws ParameterError when the invariants fail.
  void validate() const;
};

struct SyntheticData {
  std::vector<OmicsView> views;
  std::vector<std::string> sample_ids;  // samples present in at least one view
  std::vector<std::uint32_t> labels;    // aligned with sample_ids
  std::vector<SurvivalRecord> survival; // aligned with sample_ids, group = label
};

// Cluster labels follow the proportions. In each view the first
// round(informative_fraction * dim) features carry the group mean plus
// Gaussian noise and the rest are noise only; bernoulli views emit the
// sigmoid of that signal as a probability. Each sample is dropped from each
// view independently with the view's missing fraction; samples dropped from
// every view are removed. Durations are exponential with the cluster's rate
// and a random censor_fraction of them is censored uniformly before the
// event.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

// Flat key-value spec:
//   n, clusters, proportions (comma list), seed, base_hazard, hazard_ratio,
//   censor_fraction, views (comma list of names), and per view
//   <name>.dim, .separation, .noise, .informative, .missing, .likelihood,
//   .cluster_map (comma list).
SyntheticSpec load_synthetic_spec(const std::filesystem::path& path);
SyntheticSpec parse_synthetic_spec(std::istream& in);

// Two-column (sample_id, label) files.
std::string format_labels(const std::vector<std::string>& ids, std::span<const std::uint32_t> labels,
                          const std::string& label_column = "label");
struct LabelTable {
  std::vector<std::string> ids;
  std::vector<std::uint32_t> labels;
};
LabelTable load_labels(const std::filesystem::path& path);

// sample_id, duration, event, group.
std::string format_survival(std::span<const SurvivalRecord> records);
std::vector<SurvivalRecord> load_survival(const std::filesystem::path& path);

}  // namespace scone
