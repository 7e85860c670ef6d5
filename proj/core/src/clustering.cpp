#include "scone/clustering.hpp"

#include <algorithm>
#include <cstdlib>
#include <numeric>
#include <thread>
#include <unordered_map>

#include "scone/error.hpp"
#include "scone/matrix.hpp"

namespace scone {

std::size_t compact_labels(std::vector<std::uint32_t>& labels) {
  std::unordered_map<std::uint32_t, std::uint32_t> remap;
  for (auto& l : labels) {
    auto [it, _] = remap.emplace(l, static_cast<std::uint32_t>(remap.size()));
    l = it->second;
  }
  return remap.size();
}

namespace {

// Graph of one Louvain level; self_loop[i] is A_ii counted once, so
// degree[i] = sum_j w_ij + 2 self_loop[i].
struct Level {
  std::vector<std::vector<std::pair<std::uint32_t, double>>> adj;
  std::vector<double> self_loop;
  std::vector<double> degree;
};

Level from_graph(const UndirectedWeightedGraph& g) {
  Level l;
  const std::size_t n = g.node_count();
  l.adj.resize(n);
  l.self_loop.assign(n, 0.0);
  l.degree.assign(n, 0.0);
  for (std::size_t u = 0; u < n; ++u) {
    for (const auto& e : g.edges(u)) {
      l.adj[u].push_back({e.to, e.weight});
      l.degree[u] += e.weight;
    }
  }
  return l;
}

// One local-moving phase. Returns true when any node changed community.
bool local_moving(const Level& l, double m2, double gamma, Rng& rng, std::vector<std::uint32_t>& comm) {
  const std::size_t n = l.adj.size();
  comm.resize(n);
  std::iota(comm.begin(), comm.end(), 0u);
  std::vector<double> tot = l.degree;
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  rng.shuffle(std::span<std::uint32_t>(order));

  std::vector<double> link(n, 0.0);
  std::vector<std::uint32_t> touched;
  bool moved_any = false;
  bool moved = true;
  while (moved) {
    moved = false;
    for (std::uint32_t u : order) {
      const std::uint32_t own = comm[u];
      const double ku = l.degree[u];
      touched.clear();
      for (const auto& [v, w] : l.adj[u]) {
        const std::uint32_t c = comm[v];
        if (link[c] == 0.0) touched.push_back(c);
        link[c] += w;
      }
      tot[own] -= ku;
      double best_gain = link[own] - gamma * tot[own] * ku / m2;
      std::uint32_t best = own;
      for (std::uint32_t c : touched) {
        const double gain = link[c] - gamma * tot[c] * ku / m2;
        if (gain > best_gain + 1e-12) {
          best_gain = gain;
          best = c;
        }
      }
      tot[best] += ku;
      for (std::uint32_t c : touched) link[c] = 0.0;
      link[own] = 0.0;
      if (best != own) {
        comm[u] = best;
        moved = true;
        moved_any = true;
      }
    }
  }
  return moved_any;
}

Level aggregate(const Level& l, const std::vector<std::uint32_t>& comm, std::size_t count) {
  Level out;
  out.adj.resize(count);
  out.self_loop.assign(count, 0.0);
  out.degree.assign(count, 0.0);
  std::vector<std::unordered_map<std::uint32_t, double>> acc(count);
  for (std::size_t u = 0; u < l.adj.size(); ++u) {
    const std::uint32_t cu = comm[u];
    out.self_loop[cu] += l.self_loop[u];
    out.degree[cu] += l.degree[u];
    for (const auto& [v, w] : l.adj[u]) {
      const std::uint32_t cv = comm[v];
      if (cu == cv) {
        out.self_loop[cu] += 0.5 * w;  // each internal edge is listed from both ends
      } else {
        acc[cu][cv] += w;
      }
    }
  }
  for (std::size_t c = 0; c < count; ++c) {
    out.adj[c].assign(acc[c].begin(), acc[c].end());
    std::sort(out.adj[c].begin(), out.adj[c].end());
  }
  return out;
}

}  // namespace

Partition louvain(const UndirectedWeightedGraph& g, double resolution, Rng& rng) {
  if (!(resolution > 0.0)) throw ParameterError("louvain: resolution must be positive");
  if (g.node_count() == 0 || g.total_weight() <= 0.0) throw UndefinedError("louvain: graph has no edges");
  const double m2 = g.total_weight();

  Partition p;
  p.resolution = resolution;
  p.labels.resize(g.node_count());
  std::iota(p.labels.begin(), p.labels.end(), 0u);

  Level level = from_graph(g);
  std::vector<std::uint32_t> comm;
  while (true) {
    if (!local_moving(level, m2, resolution, rng, comm)) break;
    const std::size_t count = compact_labels(comm);
    for (auto& l : p.labels) l = comm[l];
    p.level_modularity.push_back(modularity(g, p.labels, resolution));
    if (count == level.adj.size()) break;
    level = aggregate(level, comm, count);
  }
  p.communities = compact_labels(p.labels);
  p.modularity = modularity(g, p.labels, resolution);
  return p;
}

std::vector<double> sweep_resolutions() {
  std::vector<double> r;
  for (int k = 1; k <= 20; ++k) r.push_back(k / 10.0);
  return r;
}

std::size_t default_thread_count() {
  const char* env = std::getenv("SCONE_THREADS");
  if (!env) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 1) return 1;
  return static_cast<std::size_t>(v);
}

SweepResult resolution_sweep(const UndirectedWeightedGraph& g, SweepSelection selection, Rng& rng,
                             std::size_t threads) {
  if (selection.mode == SweepSelection::Mode::target_k && selection.target_k < 2) {
    throw ParameterError("target cluster count must be at least 2");
  }
  const auto grid = sweep_resolutions();
  SweepResult out;
  out.points.resize(grid.size());
  out.scores.resize(grid.size());
  std::vector<std::exception_ptr> errors(grid.size());
  auto run = [&](std::size_t k) {
    try {
      Rng local = rng.derive(k + 1);
      out.points[k] = louvain(g, grid[k], local);
      out.scores[k] = modularity(g, out.points[k].labels, 1.0);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  };
  if (threads == 0) threads = default_thread_count();
  threads = std::min(threads, grid.size());
  if (threads <= 1) {
    for (std::size_t k = 0; k < grid.size(); ++k) run(k);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t k = t; k < grid.size(); k += threads) run(k);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::size_t best = grid.size();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (selection.mode == SweepSelection::Mode::target_k && out.points[k].communities != selection.target_k) continue;
    if (best == grid.size() || out.scores[k] > out.scores[best]) best = k;
  }
  if (best == grid.size()) {
    throw NoValidClusteringError("no resolution in the sweep produced " + std::to_string(selection.target_k) +
                                 " communities");
  }
  out.best = out.points[best];
  return out;
}

UndirectedWeightedGraph knn_graph(const Matrix& z, std::size_t k) { return symmetrize(build_knn(z, k)); }

std::string format_partition(const std::vector<std::string>& ids, const Partition& p) {
  if (ids.size() != p.labels.size()) throw DimensionError("format_partition: ids and labels differ in length");
  std::string out = "sample_id\tcluster\n";
  for (std::size_t i = 0; i < ids.size(); ++i) out += ids[i] + "\t" + std::to_string(p.labels[i]) + "\n";
  return out;
}

}  // namespace scone
