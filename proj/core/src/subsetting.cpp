#include "scone/subsetting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "scone/error.hpp"

namespace scone {

namespace {
constexpr std::size_t kAbsent = std::numeric_limits<std::size_t>::max();

}  // namespace

std::size_t min_overlap_count(std::size_t n, std::size_t k_s, double min_overlap) {
  std::size_t v = static_cast<std::size_t>(std::ceil(min_overlap * static_cast<double>(k_s)));
  if (2 * k_s > n) v = std::max(v, 2 * k_s - n);
  return std::max<std::size_t>(v, 1);
}

SubsetPair sample_subsets(std::size_t n, std::size_t k_s, double min_overlap, Rng& rng) {
  if (!(min_overlap > 0.0 && min_overlap < 1.0)) {
    throw ParameterError("sample_subsets: min-overlap must lie in (0, 1)");
  }
  if (k_s < 2 || n < k_s + 1) {
    throw ParameterError("sample_subsets: need 2 <= k_s < n, got k_s=" + std::to_string(k_s) +
                         ", n=" + std::to_string(n));
  }
  const std::size_t lo = min_overlap_count(n, k_s, min_overlap);
  const std::size_t hi = k_s - 1;
  if (lo > hi) {
    throw ParameterError("sample_subsets: no overlap size satisfies the constraints (k_s=" +
                         std::to_string(k_s) + ", n=" + std::to_string(n) + ")");
  }
  const std::size_t v = lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
  const std::size_t exclusive = k_s - v;
  const std::size_t needed = v + 2 * exclusive;

  // Partial Fisher-Yates: the first `needed` entries are a uniform draw
  // without replacement.
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = 0; i < needed; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(perm[i], perm[j]);
  }

  SubsetPair out;
  out.s1.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(v + exclusive));
  out.s2.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(v));
  out.s2.insert(out.s2.end(), perm.begin() + static_cast<std::ptrdiff_t>(v + exclusive),
                perm.begin() + static_cast<std::ptrdiff_t>(needed));
  std::sort(out.s1.begin(), out.s1.end());
  std::sort(out.s2.begin(), out.s2.end());

  std::size_t j = 0;
  for (std::size_t i = 0; i < out.s1.size(); ++i) {
    while (j < out.s2.size() && out.s2[j] < out.s1[i]) ++j;
    if (j < out.s2.size() && out.s2[j] == out.s1[i]) out.pairs.positives.push_back({i, j});
  }
  return out;
}

PairLists build_pairs(const SubsetPair& pair, Rng& rng) {
  PairLists out;
  std::vector<std::size_t> only1, only2;
  std::size_t i = 0, j = 0;
  while (i < pair.s1.size() || j < pair.s2.size()) {
    if (j == pair.s2.size() || (i < pair.s1.size() && pair.s1[i] < pair.s2[j])) {
      only1.push_back(i++);
    } else if (i == pair.s1.size() || pair.s2[j] < pair.s1[i]) {
      only2.push_back(j++);
    } else {
      out.positives.push_back({i++, j++});
    }
  }
  if (only1.empty() || only2.empty()) {
    throw SamplingError("build_pairs: both subsets need samples the other lacks");
  }
  rng.shuffle(std::span<std::size_t>(only1));
  rng.shuffle(std::span<std::size_t>(only2));
  const std::size_t m = std::min(only1.size(), only2.size());
  for (std::size_t k = 0; k < m; ++k) out.negatives.push_back({only1[k], only2[k]});
  return out;
}

SubsetView materialize_view(const Matrix& x, std::span<const std::size_t> view_samples,
                            std::span<const std::size_t> subset, std::size_t k_k,
                            std::size_t view, const std::string& view_name) {
  if (view_samples.size() != x.rows()) {
    throw DimensionError("materialize_view: " + std::to_string(view_samples.size()) +
                         " sample ids for " + std::to_string(x.rows()) + " rows");
  }
  std::size_t universe = 0;
  for (std::size_t s : view_samples) universe = std::max(universe, s + 1);
  for (std::size_t s : subset) universe = std::max(universe, s + 1);
  std::vector<std::size_t> row_of(universe, kAbsent);
  for (std::size_t r = 0; r < view_samples.size(); ++r) row_of[view_samples[r]] = r;

  SubsetView out;
  out.view = view;
  std::vector<std::size_t> rows;
  for (std::size_t p = 0; p < subset.size(); ++p) {
    const std::size_t r = row_of[subset[p]];
    if (r == kAbsent) continue;
    rows.push_back(r);
    out.samples.push_back(subset[p]);
    out.positions.push_back(p);
  }
  if (rows.size() < k_k + 1) {
    const std::string label = view_name.empty() ? std::to_string(view) : "'" + view_name + "'";
    throw ParameterError("view " + label + ": subset holds " + std::to_string(rows.size()) +
                         " samples, need at least k_k + 1 = " + std::to_string(k_k + 1));
  }
  out.x = select_rows(x, rows);
  out.graph = build_knn(out.x, k_k);
  return out;
}

PairLists project_pairs(const PairLists& pairs, const SubsetView& a, const SubsetView& b) {
  const std::size_t na = a.positions.empty() ? 0 : a.positions.back() + 1;
  const std::size_t nb = b.positions.empty() ? 0 : b.positions.back() + 1;
  std::vector<std::size_t> row_a(na, kAbsent), row_b(nb, kAbsent);
  for (std::size_t r = 0; r < a.positions.size(); ++r) row_a[a.positions[r]] = r;
  for (std::size_t r = 0; r < b.positions.size(); ++r) row_b[b.positions[r]] = r;
  auto project = [&](const std::vector<std::pair<std::size_t, std::size_t>>& in,
                     std::vector<std::pair<std::size_t, std::size_t>>& out) {
    for (const auto& [p, q] : in) {
      if (p < na && q < nb && row_a[p] != kAbsent && row_b[q] != kAbsent)
        out.push_back({row_a[p], row_b[q]});
    }
  };
  PairLists out;
  project(pairs.positives, out.positives);
  project(pairs.negatives, out.negatives);
  return out;
}

}  // namespace scone
