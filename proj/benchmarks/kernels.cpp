#include <benchmark/benchmark.h>

#include <vector>

#include "scone/clustering.hpp"
#include "scone/data.hpp"
#include "scone/gat.hpp"
#include "scone/graph.hpp"
#include "scone/matrix.hpp"
#include "scone/rng.hpp"
#include "scone/training.hpp"

using namespace scone;

namespace {

Matrix gaussian(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.normal();
  return m;
}

std::vector<OmicsView> synthetic_views(std::size_t n) {
  SyntheticSpec spec;
  spec.n = n;
  for (auto [name, dim] : {std::pair{"rna", 50u}, std::pair{"protein", 20u}}) {
    SyntheticViewSpec v;
    v.name = name;
    v.dim = dim;
    spec.views.push_back(v);
  }
  auto views = generate_synthetic(spec).views;
  for (auto& v : views) v = zscore(std::move(v));
  return views;
}

}  // namespace

static void BM_Matmul(benchmark::State& state) {
  Rng rng(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = gaussian(n, 256, rng), b = gaussian(256, 128, rng);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * 256 * 128));
}
BENCHMARK(BM_Matmul)->Arg(256)->Arg(1024);

static void BM_BuildKnn(benchmark::State& state) {
  Rng rng(2);
  const Matrix x = gaussian(static_cast<std::size_t>(state.range(0)), 50, rng);
  for (auto _ : state) benchmark::DoNotOptimize(build_knn(x, 15));
}
BENCHMARK(BM_BuildKnn)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

static void BM_GatForward(benchmark::State& state) {
  Rng rng(3);
  const Matrix h = gaussian(static_cast<std::size_t>(state.range(0)), 256, rng);
  const KnnGraph g = build_knn(h, 15);
  GatLayer layer = GatLayer::glorot(256, 128, Activation::leaky_relu, rng);
  for (auto _ : state) benchmark::DoNotOptimize(gat_forward(h, g, layer));
}
BENCHMARK(BM_GatForward)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

static void BM_SubsetEpoch(benchmark::State& state) {
  const auto views = synthetic_views(static_cast<std::size_t>(state.range(0)));
  TrainConfig config;
  SconeModel model({views[0].descriptor(), views[1].descriptor()}, config.model, 4);
  const auto params = model.parameters();
  AdamState adam = make_adam_state(config.adam, params);
  const ViewAlignment al = align_views(views);
  const std::size_t k_s = config.k_s.resolve(al.samples.size());
  Rng rng(5);
  for (auto _ : state) benchmark::DoNotOptimize(subset_epoch(model, adam, views, al, config, k_s, rng));
}
BENCHMARK(BM_SubsetEpoch)->Arg(600)->Arg(3000)->Unit(benchmark::kMillisecond);

static void BM_ResolutionSweep(benchmark::State& state) {
  Rng rng(6);
  Matrix z = gaussian(static_cast<std::size_t>(state.range(0)), 16, rng);
  for (std::size_t i = 0; i < z.rows(); ++i) z(i, i % 4) += 6.0;
  const auto g = knn_graph(z, 15);
  for (auto _ : state) benchmark::DoNotOptimize(resolution_sweep(g, SweepSelection::best(), rng, 1));
}
BENCHMARK(BM_ResolutionSweep)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
