#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "scone/graph.hpp"
#include "scone/matrix.hpp"
#include "scone/rng.hpp"

namespace scone {

struct Partition {
  std::vector<std::uint32_t> labels;  // contiguous from 0
  std::size_t communities = 0;
  double resolution = 1.0;
  double modularity = 0.0;  // at `resolution`
  // Modularity after each local-moving phase, on the input graph at
  // `resolution`; non-decreasing.
  std::vector<double> level_modularity;
};

// Relabels so labels are contiguous from 0 in order of first appearance.
std::size_t compact_labels(std::vector<std::uint32_t>& labels);

// Two-phase Louvain: local moving in a seeded random node order (a node
// moves only on a strictly positive gain), then aggregation of communities
// into super-nodes, repeated until a level makes no move. Throws
// UndefinedError on a graph without edges and ParameterError on a
// non-positive resolution.
Partition louvain(const UndirectedWeightedGraph& g, double resolution, Rng& rng);

// The sweep grid: k / 10 for k = 1..20.
std::vector<double> sweep_resolutions();

struct SweepSelection {
  enum class Mode { best_modularity, target_k } mode = Mode::best_modularity;
  std::size_t target_k = 0;

  static SweepSelection best() { return {}; }
  static SweepSelection target(std::size_t k) { return {Mode::target_k, k}; }
};

struct SweepResult {
  Partition best;
  std::vector<Partition> points;  // one per resolution, grid order
  std::vector<double> scores;     // selection score per point
};

// Runs louvain at every grid resolution, point k with rng.derive(k), and
// picks the partition with the highest standard (resolution 1) modularity,
// optionally among those with exactly target_k communities. `threads` = 0
// reads SCONE_THREADS (default 1); the result does not depend on it.
// Throws NoValidClusteringError when no point has target_k communities and
// ParameterError when target_k < 2.
SweepResult resolution_sweep(const UndirectedWeightedGraph& g, SweepSelection selection, Rng& rng,
                             std::size_t threads = 0);

// Thread count from SCONE_THREADS, 1 when unset or invalid.
std::size_t default_thread_count();

// Undirected KNN graph of the rows of z.
UndirectedWeightedGraph knn_graph(const Matrix& z, std::size_t k);

// sample_id<TAB>cluster lines under a header.
std::string format_partition(const std::vector<std::string>& ids, const Partition& p);

}  // namespace scone
