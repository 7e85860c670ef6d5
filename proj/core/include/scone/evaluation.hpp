#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace scone {

// r x c counts between two labelings. Label values need not be contiguous;
// rows and columns follow the sorted distinct labels.
struct ContingencyTable {
  std::vector<std::vector<std::uint64_t>> counts;
  std::vector<std::uint64_t> row_sums;
  std::vector<std::uint64_t> col_sums;
  std::uint64_t total = 0;

  static ContingencyTable from_labels(std::span<const std::uint32_t> a,
                                      std::span<const std::uint32_t> b);
};

// Adjusted Rand index over pair counts. Throws DimensionError on a length
// mismatch and ParameterError below two samples.
double ari(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b);

// Natural-log entropy of a labeling's cluster sizes.
double entropy(std::span<const std::uint64_t> sizes, std::uint64_t total);
double mutual_information(const ContingencyTable& t);
// E[MI] under the hypergeometric (fixed marginals) permutation model.
double expected_mutual_information(const ContingencyTable& t);

// (MI - E[MI]) / (mean(H_a, H_b) - E[MI]). When the denominator vanishes the
// value is 1 for labelings equal up to relabeling and DegenerateInputError
// otherwise.
double ami(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b);

struct SurvivalRecord {
  std::string sample_id;
  double duration = 0.0;
  bool event = false;  // false: censored
  std::uint32_t group = 0;
};

struct LogrankResult {
  double statistic = 0.0;
  std::size_t dof = 0;  // rank of the covariance, g - 1 unless degenerate
  double p_value = 1.0;
  double neg_log10_p = 0.0;  // from log p, so it stays finite when p underflows
};

// g-group logrank test with tied event times aggregated per distinct time.
// Throws ParameterError for fewer than two groups or a negative/NaN
// duration, UndefinedError when no event is observed.
LogrankResult logrank(std::span<const SurvivalRecord> records);

// Regularized upper incomplete gamma Q(a, x) and its natural log.
double regularized_gamma_q(double a, double x);
double log_regularized_gamma_q(double a, double x);
// P(X > x) for X ~ chi-square(dof).
double chi_square_upper_tail(double x, double dof);
double log_chi_square_upper_tail(double x, double dof);

}  // namespace scone
