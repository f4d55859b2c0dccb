#include <benchmark/benchmark.h>

#include "tkgode/eval.hpp"

using namespace tkg;

namespace {

struct Fixture {
  TkgData data;
  ModelParams params;
  TrainConfig cfg;

  static Fixture make(int entities, int relations, int timestamps, int dim) {
    PatternSpec spec;
    spec.kind = Pattern::Periodic;
    Fixture f;
    f.data = prepare_data(generate_synthetic_tkg(entities, relations, timestamps, spec, 7));
    f.cfg.dim = dim;
    f.cfg.layers = 2;
    f.cfg.history_length = 4;
    Rng rng(7);
    f.params = ModelParams::init(entities, relations, dim, f.cfg.layers, DecoderKind::DistMult,
                                 0.1, 0.1, rng);
    return f;
  }
};

Fixture& fixture() {
  static Fixture f = Fixture::make(20, 4, 40, 16);
  return f;
}

void BM_InferRepresentation(benchmark::State& state) {
  Fixture& f = fixture();
  EncoderConfig cfg{f.cfg.history_length, f.cfg.solver};
  const int target_t = 12;
  for (auto _ : state) {
    Matrix h = infer_representation(f.data, f.params, cfg, target_t);
    benchmark::DoNotOptimize(h.data());
  }
}
BENCHMARK(BM_InferRepresentation);

void BM_TrainStepUnrolled(benchmark::State& state) {
  Fixture& f = fixture();
  TrainConfig cfg = f.cfg;
  cfg.solver.backward_mode = BackwardMode::Unrolled;
  const int target_t = 12;
  const auto queries = queries_at(f.data, target_t);
  for (auto _ : state) {
    auto grads = model_gradients(f.data, f.params, cfg, target_t, queries);
    benchmark::DoNotOptimize(grads.data());
  }
}
BENCHMARK(BM_TrainStepUnrolled);

void BM_TrainStepInterpolatedAdjoint(benchmark::State& state) {
  Fixture& f = fixture();
  TrainConfig cfg = f.cfg;
  cfg.solver.backward_mode = BackwardMode::InterpolatedAdjoint;
  const int target_t = 12;
  const auto queries = queries_at(f.data, target_t);
  for (auto _ : state) {
    auto grads = model_gradients(f.data, f.params, cfg, target_t, queries);
    benchmark::DoNotOptimize(grads.data());
  }
}
BENCHMARK(BM_TrainStepInterpolatedAdjoint);

void BM_ScoreAllObjects(benchmark::State& state) {
  Fixture& f = fixture();
  const Matrix h = f.params.h_global;
  int s = 0;
  for (auto _ : state) {
    auto scores = score_all_objects(h, s, s % (2 * f.params.num_relations), f.params.decoder,
                                    f.params.num_entities);
    benchmark::DoNotOptimize(scores.data());
    s = (s + 1) % f.params.num_entities;
  }
}
BENCHMARK(BM_ScoreAllObjects);

void BM_RankQuery(benchmark::State& state) {
  Rng rng(3);
  std::vector<double> scores(static_cast<size_t>(state.range(0)));
  for (auto& v : scores) v = rng.next_double();
  std::unordered_set<int> mask{1, 5, 9};
  for (auto _ : state) {
    benchmark::DoNotOptimize(rank_query(scores, 0, mask));
  }
}
BENCHMARK(BM_RankQuery)->Arg(100)->Arg(10000);

void BM_BuildJumpTensors(benchmark::State& state) {
  Fixture& f = fixture();
  for (auto _ : state) {
    auto jumps = build_jump_tensors(f.data.snapshots);
    benchmark::DoNotOptimize(jumps.data());
  }
}
BENCHMARK(BM_BuildJumpTensors);

}  // namespace

BENCHMARK_MAIN();
