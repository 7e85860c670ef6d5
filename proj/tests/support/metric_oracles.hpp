#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "scone/evaluation.hpp"

// Reference implementations of the clustering metrics built from first
// principles: pair counting for ARI, and expected mutual information by
// enumerating every arrangement of one labeling.
namespace scone::testing {

inline double ari_pairs(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
  const std::size_t n = a.size();
  double both = 0, in_a = 0, in_b = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool sa = a[i] == a[j], sb = b[i] == b[j];
      both += sa && sb;
      in_a += sa;
      in_b += sb;
    }
  const double pairs = n * (n - 1) / 2.0;
  const double expected = in_a * in_b / pairs;
  const double max = 0.5 * (in_a + in_b);
  if (max == expected) return 1.0;
  return (both - expected) / (max - expected);
}

inline double mi_direct(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
  const double n = static_cast<double>(a.size());
  std::map<std::uint32_t, double> ca, cb;
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> cab;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca[a[i]] += 1;
    cb[b[i]] += 1;
    cab[{a[i], b[i]}] += 1;
  }
  double mi = 0.0;
  for (const auto& [k, c] : cab) mi += c / n * std::log(c * n / (ca[k.first] * cb[k.second]));
  return mi;
}

inline double entropy_direct(std::span<const std::uint32_t> a) {
  const double n = static_cast<double>(a.size());
  std::map<std::uint32_t, double> c;
  for (auto v : a) c[v] += 1;
  double h = 0.0;
  for (const auto& [_, m] : c) h -= m / n * std::log(m / n);
  return h;
}

// Mean MI over every distinct arrangement of b against a. Each distinct
// arrangement of a multiset stands for the same number of permutations, so
// the plain mean is the permutation-model expectation.
inline double expected_mi_enumerated(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
  std::vector<std::uint32_t> perm(b.begin(), b.end());
  std::sort(perm.begin(), perm.end());
  double total = 0.0;
  std::size_t count = 0;
  do {
    total += mi_direct(a, perm);
    ++count;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return total / static_cast<double>(count);
}

// Sorted cluster sizes; E[MI] depends only on the two margins.
inline std::vector<std::uint32_t> margin(std::span<const std::uint32_t> a) {
  std::map<std::uint32_t, std::uint32_t> c;
  for (auto v : a) ++c[v];
  std::vector<std::uint32_t> out;
  for (const auto& [_, m] : c) out.push_back(m);
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<std::uint32_t> labels_from_margin(const std::vector<std::uint32_t>& sizes) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t k = 0; k < sizes.size(); ++k) out.insert(out.end(), sizes[k], k);
  return out;
}

class AmiOracle {
 public:
  double expected_mi(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
    auto key = std::make_pair(margin(a), margin(b));
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const double e = expected_mi_enumerated(labels_from_margin(key.first), labels_from_margin(key.second));
    cache_.emplace(key, e);
    return e;
  }

  // Arithmetic-mean normalisation; both-single-cluster and the 0/0 case of
  // identical partitions are defined as 1.
  double ami(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
    const double ha = entropy_direct(a), hb = entropy_direct(b);
    if (ha == 0.0 && hb == 0.0) return 1.0;
    const double e = expected_mi(a, b);
    const double denom = 0.5 * (ha + hb) - e;
    if (std::abs(denom) < 1e-12) return 1.0;
    return (mi_direct(a, b) - e) / denom;
  }

 private:
  std::map<std::pair<std::vector<std::uint32_t>, std::vector<std::uint32_t>>, double> cache_;
};

// Every set partition of n items as a restricted growth string.
inline void for_each_partition(std::size_t n, const std::function<void(const std::vector<std::uint32_t>&)>& f) {
  std::vector<std::uint32_t> a(n, 0);
  std::function<void(std::size_t, std::uint32_t)> rec = [&](std::size_t i, std::uint32_t max) {
    if (i == n) {
      f(a);
      return;
    }
    for (std::uint32_t v = 0; v <= max + 1; ++v) {
      a[i] = v;
      rec(i + 1, std::max(max, v));
    }
  };
  if (n > 0) rec(1, 0);
}

inline std::vector<std::vector<std::uint32_t>> all_partitions(std::size_t n) {
  std::vector<std::vector<std::uint32_t>> out;
  for_each_partition(n, [&](const std::vector<std::uint32_t>& p) { out.push_back(p); });
  return out;
}

}  // namespace scone::testing
