#include "scone/evaluation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "scone/error.hpp"

namespace scone {

namespace {

void check_labelings(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
  if (a.size() != b.size()) {
    throw DimensionError("labelings differ in length (" + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
  }
  if (a.size() < 2) throw ParameterError("at least two samples are required");
}

std::uint64_t pairs(std::uint64_t n) { return n * (n - (n > 0 ? 1 : 0)) / 2; }

bool same_up_to_relabeling(const ContingencyTable& t) {
  // Each row and each column has exactly one non-zero cell.
  std::size_t nonzero = 0;
  for (const auto& row : t.counts)
    for (auto c : row) nonzero += c != 0;
  return nonzero == t.row_sums.size() && nonzero == t.col_sums.size();
}

}  // namespace

ContingencyTable ContingencyTable::from_labels(std::span<const std::uint32_t> a,
                                               std::span<const std::uint32_t> b) {
  if (a.size() != b.size()) throw DimensionError("labelings differ in length");
  std::map<std::uint32_t, std::size_t> ra, rb;
  for (auto v : a) ra.emplace(v, 0);
  for (auto v : b) rb.emplace(v, 0);
  std::size_t k = 0;
  for (auto& [_, idx] : ra) idx = k++;
  k = 0;
  for (auto& [_, idx] : rb) idx = k++;
  ContingencyTable t;
  t.counts.assign(ra.size(), std::vector<std::uint64_t>(rb.size(), 0));
  t.row_sums.assign(ra.size(), 0);
  t.col_sums.assign(rb.size(), 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::size_t r = ra[a[i]], c = rb[b[i]];
    ++t.counts[r][c];
    ++t.row_sums[r];
    ++t.col_sums[c];
  }
  t.total = a.size();
  return t;
}

double ari(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
  check_labelings(a, b);
  const auto t = ContingencyTable::from_labels(a, b);
  std::uint64_t index = 0, sum_a = 0, sum_b = 0;
  for (const auto& row : t.counts)
    for (auto c : row) index += pairs(c);
  for (auto s : t.row_sums) sum_a += pairs(s);
  for (auto s : t.col_sums) sum_b += pairs(s);
  const double all = static_cast<double>(pairs(t.total));
  const double expected = static_cast<double>(sum_a) * static_cast<double>(sum_b) / all;
  const double max_index = 0.5 * static_cast<double>(sum_a + sum_b);
  if (max_index == expected) return 1.0;  // only reached by identical partitions
  return (static_cast<double>(index) - expected) / (max_index - expected);
}

double entropy(std::span<const std::uint64_t> sizes, std::uint64_t total) {
  double h = 0.0;
  const double n = static_cast<double>(total);
  for (auto s : sizes) {
    if (s == 0) continue;
    const double p = static_cast<double>(s) / n;
    h -= p * std::log(p);
  }
  return h;
}

double mutual_information(const ContingencyTable& t) {
  const double n = static_cast<double>(t.total);
  double mi = 0.0;
  for (std::size_t i = 0; i < t.counts.size(); ++i) {
    for (std::size_t j = 0; j < t.counts[i].size(); ++j) {
      const auto c = t.counts[i][j];
      if (c == 0) continue;
      const double nij = static_cast<double>(c);
      mi += nij / n *
            std::log(n * nij / (static_cast<double>(t.row_sums[i]) * static_cast<double>(t.col_sums[j])));
    }
  }
  return mi;
}

double expected_mutual_information(const ContingencyTable& t) {
  const std::uint64_t N = t.total;
  const double n = static_cast<double>(N);
  const double lg_n = std::lgamma(n + 1.0);
  auto lf = [](double v) { return std::lgamma(v + 1.0); };
  double emi = 0.0;
  for (auto ai : t.row_sums) {
    for (auto bj : t.col_sums) {
      const double a = static_cast<double>(ai), b = static_cast<double>(bj);
      const double fixed = lf(a) + lf(b) + lf(n - a) + lf(n - b) - lg_n;
      const std::uint64_t lo = std::max<std::int64_t>(1, static_cast<std::int64_t>(ai + bj) -
                                                             static_cast<std::int64_t>(N));
      const std::uint64_t hi = std::min(ai, bj);
      for (std::uint64_t k = lo; k <= hi; ++k) {
        const double nij = static_cast<double>(k);
        const double log_p = fixed - lf(nij) - lf(a - nij) - lf(b - nij) - lf(n - a - b + nij);
        emi += nij / n * std::log(n * nij / (a * b)) * std::exp(log_p);
      }
    }
  }
  return emi;
}

double ami(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
  check_labelings(a, b);
  const auto t = ContingencyTable::from_labels(a, b);
  if (t.row_sums.size() == 1 && t.col_sums.size() == 1) return 1.0;
  const double mi = mutual_information(t);
  const double emi = expected_mutual_information(t);
  const double h = 0.5 * (entropy(t.row_sums, t.total) + entropy(t.col_sums, t.total));
  const double denom = h - emi;
  if (std::abs(denom) < 1e-15) {
    if (same_up_to_relabeling(t)) return 1.0;
    throw DegenerateInputError("ami: expected and maximal mutual information coincide");
  }
  return (mi - emi) / denom;
}

double log_regularized_gamma_q(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0)) throw DomainError("regularized gamma: need a > 0 and x >= 0");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return -std::numeric_limits<double>::infinity();
  const double log_prefix = -x + a * std::log(x) - std::lgamma(a);
  constexpr double eps = 1e-16;
  constexpr int max_iter = 100000;
  if (x < a + 1.0) {
    // Series for P(a, x), then Q = 1 - P.
    double term = 1.0 / a, sum = term, ap = a;
    for (int i = 0; i < max_iter; ++i) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::abs(term) < std::abs(sum) * eps) break;
    }
    const double p = std::exp(log_prefix) * sum;
    return std::log1p(-std::min(p, 1.0));
  }
  // Lentz continued fraction for Q(a, x).
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i < max_iter; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < eps) break;
  }
  return log_prefix + std::log(h);
}

double regularized_gamma_q(double a, double x) { return std::exp(log_regularized_gamma_q(a, x)); }

double log_chi_square_upper_tail(double x, double dof) {
  if (!(dof > 0.0)) throw DomainError("chi-square: degrees of freedom must be positive");
  if (x <= 0.0) return 0.0;
  return log_regularized_gamma_q(0.5 * dof, 0.5 * x);
}

double chi_square_upper_tail(double x, double dof) {
  return std::exp(log_chi_square_upper_tail(x, dof));
}

LogrankResult logrank(std::span<const SurvivalRecord> records) {
  std::map<std::uint32_t, std::size_t> group_index;
  for (const auto& r : records) {
    if (!(r.duration >= 0.0) || !std::isfinite(r.duration)) {
      throw ParameterError("logrank: sample '" + r.sample_id + "' has an invalid duration");
    }
    group_index.emplace(r.group, 0);
  }
  if (group_index.size() < 2) throw ParameterError("logrank: at least two groups are required");
  std::size_t g = 0;
  for (auto& [_, idx] : group_index) idx = g++;

  struct Item {
    double time;
    bool event;
    std::size_t group;
  };
  std::vector<Item> items;
  items.reserve(records.size());
  for (const auto& r : records) items.push_back({r.duration, r.event, group_index[r.group]});
  std::sort(items.begin(), items.end(), [](const Item& x, const Item& y) { return x.time < y.time; });

  std::vector<double> at_risk(g, 0.0);
  for (const auto& it : items) at_risk[it.group] += 1.0;
  std::vector<double> observed(g, 0.0), expected(g, 0.0);
  Eigen::MatrixXd var = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(g));
  bool any_event = false;

  std::vector<double> events(g), removed(g);
  std::size_t i = 0;
  while (i < items.size()) {
    const double t = items[i].time;
    std::fill(events.begin(), events.end(), 0.0);
    std::fill(removed.begin(), removed.end(), 0.0);
    std::size_t j = i;
    for (; j < items.size() && items[j].time == t; ++j) {
      removed[items[j].group] += 1.0;
      if (items[j].event) events[items[j].group] += 1.0;
    }
    double d = 0.0, n = 0.0;
    for (std::size_t k = 0; k < g; ++k) {
      d += events[k];
      n += at_risk[k];
    }
    if (d > 0.0) {
      any_event = true;
      for (std::size_t k = 0; k < g; ++k) {
        observed[k] += events[k];
        expected[k] += d * at_risk[k] / n;
      }
      if (n > 1.0) {
        const double f = d * (n - d) / (n - 1.0);
        for (std::size_t k = 0; k < g; ++k) {
          for (std::size_t l = 0; l < g; ++l) {
            const double delta = k == l ? 1.0 : 0.0;
            var(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) +=
                f * at_risk[k] / n * (delta - at_risk[l] / n);
          }
        }
      }
    }
    for (std::size_t k = 0; k < g; ++k) at_risk[k] -= removed[k];
    i = j;
  }
  if (!any_event) throw UndefinedError("logrank: no events observed");

  // The full covariance has rank g - 1; drop the last group and apply a
  // pseudo-inverse in case a group contributes nothing.
  const auto m = static_cast<Eigen::Index>(g - 1);
  Eigen::VectorXd diff(m);
  for (Eigen::Index k = 0; k < m; ++k)
    diff(k) = observed[static_cast<std::size_t>(k)] - expected[static_cast<std::size_t>(k)];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(var.topLeftCorner(m, m));
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const double cutoff = 1e-10 * std::max(1.0, lambda.cwiseAbs().maxCoeff());
  const Eigen::VectorXd proj = eig.eigenvectors().transpose() * diff;
  double stat = 0.0;
  std::size_t rank = 0;
  for (Eigen::Index k = 0; k < m; ++k) {
    if (lambda(k) > cutoff) {
      stat += proj(k) * proj(k) / lambda(k);
      ++rank;
    }
  }

  LogrankResult res;
  res.statistic = stat;
  // g - 1 unless the covariance is rank deficient.
  res.dof = std::max<std::size_t>(rank, 1);
  const double log_p = log_chi_square_upper_tail(stat, static_cast<double>(res.dof));
  res.p_value = std::exp(log_p);
  res.neg_log10_p = -log_p / std::log(10.0);
  if (res.neg_log10_p == 0.0) res.neg_log10_p = 0.0;  // normalise -0
  return res;
}

}  // namespace scone
