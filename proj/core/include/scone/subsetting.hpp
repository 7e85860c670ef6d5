#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "scone/graph.hpp"
#include "scone/matrix.hpp"
#include "scone/model.hpp"
#include "scone/rng.hpp"

namespace scone {

// Two overlapping subsets of the joint sample set, each sorted ascending.
// `pairs` holds positions into s1 (first) and s2 (second).
struct SubsetPair {
  std::vector<std::size_t> s1;
  std::vector<std::size_t> s2;
  PairLists pairs;

  std::size_t overlap() const noexcept { return pairs.positives.size(); }
};

// Smallest admissible overlap: max(ceil(min_overlap * k_s), 2 k_s - n, 1).
std::size_t min_overlap_count(std::size_t n, std::size_t k_s, double min_overlap);

// Draws the overlap size v uniformly from [min_overlap_count, k_s - 1], then
// v shared samples and two disjoint remainders of k_s - v samples each.
// Positives are filled in; negatives are left to build_pairs. Throws
// ParameterError when no valid pair exists (n < k_s + 1, k_s < 2, or an
// empty overlap range).
SubsetPair sample_subsets(std::size_t n, std::size_t k_s, double min_overlap, Rng& rng);

// Positives: one (pos-in-s1, pos-in-s2) pair per shared sample, in s1 order.
// Negatives: the exclusive parts of s1 and s2 are shuffled and matched
// one-to-one, min(|s1 \ s2|, |s2 \ s1|) pairs. Throws SamplingError when
// either exclusive part is empty.
PairLists build_pairs(const SubsetPair& pair, Rng& rng);

// One view restricted to one subset.
struct SubsetView {
  std::size_t view = 0;
  Matrix x;
  KnnGraph graph;
  std::vector<std::size_t> samples;    // joint sample id per row
  std::vector<std::size_t> positions;  // position in the subset per row
};

// Rows of x whose joint sample id (view_samples[row]) is in `subset`, in
// subset order, with a KNN graph built on the extracted rows. Throws
// ParameterError naming the view when fewer than k_k + 1 rows remain.
SubsetView materialize_view(const Matrix& x, std::span<const std::size_t> view_samples,
                            std::span<const std::size_t> subset, std::size_t k_k,
                            std::size_t view = 0, const std::string& view_name = {});

// Restricts subset-position pairs to those whose members both exist in the
// given views, re-expressed as row indices of a and b.
PairLists project_pairs(const PairLists& pairs, const SubsetView& a, const SubsetView& b);

}  // namespace scone
