#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scone/model.hpp"

namespace scone {

enum class ScalingMode { subset_pair, full_graph };
std::string to_string(ScalingMode m);

struct ScalingRecord {
  std::size_t n = 0;
  std::size_t k_s = 0;
  ScalingMode mode = ScalingMode::subset_pair;
  std::size_t peak_bytes = 0;   // median over reps
  double epoch_ms = 0.0;        // median over reps
  std::uint64_t contrastive_evaluations = 0;  // exact count, first rep
  std::size_t graph_edges = 0;
  bool failed = false;
  std::string error;
};

struct KsRule {
  bool half = true;
  double fraction = 0.5;

  std::size_t resolve(std::size_t n) const;
  static KsRule parse(const std::string& s);  // "half" or a fraction
};

struct ScalingOptions {
  std::vector<std::size_t> n_list{1000, 2000, 4000};
  KsRule ks;
  std::size_t reps = 3;
  std::size_t k_k = 15;
  std::vector<std::size_t> view_dims{50, 20};
  ModelConfig model;
  std::uint64_t seed = 0;
};

// For each n: a synthetic data set, then `reps` full-graph epochs and `reps`
// subset-pair epochs on the same data and the same initial model. A failed
// measurement (e.g. std::bad_alloc) is recorded and the run continues.
// Throws ParameterError when n_list is not strictly ascending or reps < 3.
std::vector<ScalingRecord> run_scaling(const ScalingOptions& options);

enum class ScalingField { peak_bytes, epoch_ms, contrastive_evaluations, graph_edges };

// Least-squares slope of log(field) against log(n). Throws ParameterError
// with fewer than three distinct n or a non-positive value, UndefinedError
// when the field is constant.
double fit_exponent(std::span<const ScalingRecord> records, ScalingField field);

std::string format_scaling(std::span<const ScalingRecord> records);

}  // namespace scone
