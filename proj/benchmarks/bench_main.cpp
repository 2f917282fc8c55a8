#include <benchmark/benchmark.h>

#include <kgcp/eval.hpp>
#include <kgcp/trainer.hpp>

using namespace kgcp;

namespace {

ModelKind kind_arg(std::int64_t i) { return kAllModelKinds[static_cast<std::size_t>(i)]; }

void BM_ScoreAll(benchmark::State& state) {
  const auto kind = kind_arg(state.range(0));
  const auto n = static_cast<std::size_t>(state.range(1));
  const auto model = init_model(kind, 64, n, 8, 1);
  const Query q{Direction::Tail, 3, 2};
  for (auto _ : state) benchmark::DoNotOptimize(score_all(model, q));
  state.SetLabel(to_string(kind));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_ScoreAll)->ArgsProduct({{0, 1, 2, 3, 4, 5}, {1000, 15000}});

void BM_PredictSet(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto measure = static_cast<Measure>(state.range(1));
  const auto model = init_model({ModelFamily::DistMult, 1}, 64, n, 4, 2);
  Rng rng(3);
  std::vector<double> alphas(500);
  for (double& a : alphas) {
    const Query q{Direction::Tail, static_cast<EntityId>(rng.below(n)), 0};
    a = nonconformity(score_all(model, q), static_cast<EntityId>(rng.below(n)), {measure});
  }
  const auto profile = make_profile({measure}, alphas);
  const auto scores = score_all(model, {Direction::Tail, 7, 1});
  for (auto _ : state) benchmark::DoNotOptimize(predict_set(scores, {Direction::Tail, 7, 1}, profile, 0.1));
  state.SetLabel(to_string(measure));
}
BENCHMARK(BM_PredictSet)->ArgsProduct({{1000, 15000}, {0, 1, 2, 4}});

void BM_TrainEpoch(benchmark::State& state) {
  SyntheticConfig sc;
  sc.seed = 1;
  const auto kg = generate_synthetic_kg(sc);
  TrainConfig cfg;
  Trainer trainer(kg, kind_arg(state.range(0)), 64, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(trainer.run_epoch());
  state.SetLabel(to_string(kind_arg(state.range(0))));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(kg.train.size()));
}
BENCHMARK(BM_TrainEpoch)->DenseRange(0, 5)->Unit(benchmark::kMillisecond);

void BM_FilteredRanking(benchmark::State& state) {
  SyntheticConfig sc;
  sc.seed = 2;
  const auto kg = generate_synthetic_kg(sc);
  const auto model = init_model({ModelFamily::ComplEx, 1}, 32, kg.num_entities(), kg.num_relations(), 4);
  const auto test = score_examples(model, make_query_examples(kg.test));
  const auto filter = build_filter_index(kg, kTrain | kValid);
  for (auto _ : state) benchmark::DoNotOptimize(ranking_metrics(test, &filter));
}
BENCHMARK(BM_FilteredRanking)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
