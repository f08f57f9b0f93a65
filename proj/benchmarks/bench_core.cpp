#include <benchmark/benchmark.h>

#include "moflp/dataset.hpp"
#include "moflp/gcn.hpp"
#include "moflp/metrics.hpp"
#include "moflp/nsga2.hpp"
#include "moflp/rng.hpp"
#include "moflp/sampler.hpp"

namespace {

using namespace moflp;

Instance bench_instance(int m, int n) {
  GenConfig config;
  config.m = m;
  config.n = n;
  config.seed = 4242;
  return generate_instance(config);
}

void BM_matmul(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  Rng rng(1);
  Tensor2 a(256, dim), b(dim, dim), out;
  for (double& v : a.data) v = rng.uniform(-1, 1);
  for (double& v : b.data) v = rng.uniform(-1, 1);
  for (auto _ : state) {
    matmul(a, b, out);
    benchmark::DoNotOptimize(out.data.data());
  }
  state.SetItemsProcessed(state.iterations() * 256 * dim * dim);
}
BENCHMARK(BM_matmul)->Arg(64)->Arg(128);

void BM_hypervolume(benchmark::State& state) {
  Rng rng(2);
  std::vector<MinPoint> pts;
  for (int k = 0; k < state.range(0); ++k) pts.push_back({rng.uniform(), rng.uniform()});
  for (auto _ : state) {
    benchmark::DoNotOptimize(hypervolume_2d(pts, {1.1, 1.1}));
  }
}
BENCHMARK(BM_hypervolume)->Arg(100)->Arg(1000);

void BM_nondominated_sort(benchmark::State& state) {
  Rng rng(3);
  std::vector<ObjectivePoint> pts;
  for (int k = 0; k < state.range(0); ++k) pts.push_back({rng.uniform(), rng.uniform()});
  for (auto _ : state) {
    benchmark::DoNotOptimize(fast_nondominated_sort(pts));
  }
}
BENCHMARK(BM_nondominated_sort)->Arg(200);

void BM_objective_evaluation(benchmark::State& state) {
  const Instance inst = bench_instance(10, 25);
  MoeaParams params;
  params.population_size = 100;
  params.max_evaluations = 100;
  params.seed = 1;
  auto pop = init_population(inst, params);
  std::size_t k = 0;
  for (auto _ : state) {
    Solution& s = pop[k++ % pop.size()];
    s.cost.reset();
    s.reliability.reset();
    benchmark::DoNotOptimize(evaluate(inst, s));
  }
}
BENCHMARK(BM_objective_evaluation);

void BM_nsga2_1000_evals(benchmark::State& state) {
  const Instance inst = bench_instance(10, 25);
  MoeaParams params;
  params.population_size = 100;
  params.max_evaluations = 1000;
  for (auto _ : state) {
    params.seed = static_cast<std::uint64_t>(state.iterations());
    benchmark::DoNotOptimize(nsga2_run(inst, params));
  }
}
BENCHMARK(BM_nsga2_1000_evals)->Unit(benchmark::kMillisecond);

void BM_predict_and_sample(benchmark::State& state) {
  const Instance inst = bench_instance(10, 25);
  ModelConfig config;
  config.hidden = 64;
  config.l_gcn = 3;
  config.seed = 5;
  const GcnNetwork node_net = make_network(config, HeadKind::node);
  const GcnNetwork edge_net = make_network(config, HeadKind::edge);
  SampleConfig sc;
  sc.sample_count = 200;
  for (auto _ : state) {
    const Prediction pred = predict(inst, node_net, edge_net);
    sc.seed = static_cast<std::uint64_t>(state.iterations());
    benchmark::DoNotOptimize(nondominated_filter(co_sample(pred, inst, sc)));
  }
}
BENCHMARK(BM_predict_and_sample)->Unit(benchmark::kMillisecond);

void BM_training_step(benchmark::State& state) {
  Dataset ds;
  ds.split = "train";
  ds.m = 10;
  ds.n = 25;
  for (int k = 0; k < 20; ++k) {
    DatasetEntry entry;
    entry.instance = bench_instance(10, 25);
    entry.instance.id += "-" + std::to_string(k);
    entry.front = brute_force_pareto(entry.instance);
    entry.labels = derive_labels(entry.front, 10, 25);
    entry.features_a = extract_features(entry.instance, FeatureVariant::A);
    entry.features_b = extract_features(entry.instance, FeatureVariant::B);
    ds.entries.push_back(std::move(entry));
  }
  ModelConfig config;
  config.hidden = 64;
  config.l_gcn = 3;
  config.seed = 6;
  GcnNetwork net = make_network(config, HeadKind::edge);
  std::vector<const DatasetEntry*> items;
  for (const auto& e : ds.entries) items.push_back(&e);
  const GraphBatch batch = make_graph_batch(items, config, true);
  for (auto _ : state) {
    for (Param* p : net.params()) p->zero_grad();
    benchmark::DoNotOptimize(training_loss_and_grads(net, batch));
  }
  state.SetLabel("B=20, 10x25, H=64, edge net");
}
BENCHMARK(BM_training_step)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
