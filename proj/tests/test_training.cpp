#include <doctest.h>

#include <cmath>
#include <limits>

#include "test_util.hpp"
#include "tkgode/eval.hpp"
#include "tkgode/training.hpp"

using namespace tkg;
using test::random_matrix;
using test::TempDir;

namespace {

TkgData gradcheck_data(uint64_t seed = 42) {
  PatternSpec spec;
  spec.kind = Pattern::Random;
  return prepare_data(generate_synthetic_tkg(5, 2, 6, spec, seed));
}

TrainConfig gradcheck_config(DecoderKind decoder, BackwardMode mode) {
  TrainConfig cfg;
  cfg.dim = 8;
  cfg.layers = 2;
  cfg.history_length = 2;
  cfg.jump_w = 0.1;
  cfg.decoder = decoder;
  cfg.solver.backward_mode = mode;
  return cfg;
}

ModelParams model_for(const TkgData& data, const TrainConfig& cfg, uint64_t seed) {
  Rng rng(seed);
  return ModelParams::init(data.store.num_entities, data.store.num_relations, cfg.dim,
                           cfg.layers, cfg.decoder, cfg.jump_w, cfg.delta_init, rng);
}

}  // namespace

TEST_CASE("uniform scores give ln |V| loss") {
  const int V = 8, d = 4;
  Matrix h = Matrix::ones(V + 2, d);
  std::vector<Query> queries{{0, 0, 3}, {1, 1, 5}};
  const double loss = loss_value(h, queries, DecoderParams{}, V);
  CHECK(loss == doctest::Approx(std::log(8.0)).epsilon(1e-12));
}

TEST_CASE("loss decreases monotonically as the true score grows") {
  const int V = 4, d = 2;
  Matrix h(V + 2, d, 0.8);
  for (int j = 0; j < d; ++j) h(2, j) = 0.7;
  std::vector<Query> queries{{0, 0, 2}};
  double prev = loss_value(h, queries, DecoderParams{}, V);
  for (int step = 0; step < 5; ++step) {
    for (int j = 0; j < d; ++j) h(2, j) *= 1.8;  // inflate the true object's row
    const double cur = loss_value(h, queries, DecoderParams{}, V);
    CHECK(cur < prev);
    prev = cur;
  }
  CHECK(prev < 1e-3);  // approaching the perfect-score limit
  CHECK(prev > 0.0);

  CHECK_THROWS_AS(loss_value(h, {}, DecoderParams{}, V), ContractError);
}

TEST_CASE("stabilized loss matches a naive softmax computation") {
  const int V = 5, d = 3;
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix h = random_matrix(V + 4, d, rng);
    std::vector<Query> queries{{0, 1, 2}, {3, 0, 4}, {1, 2, 0}};
    DecoderParams dec;
    const double got = loss_value(h, queries, dec, V);

    double naive = 0.0;
    for (const auto& q : queries) {
      auto scores = score_all_objects(h, q.s, q.r, dec, V);
      double z = 0.0;
      for (double s : scores) z += std::exp(s);
      naive += -std::log(std::exp(scores[q.o]) / z);
    }
    naive /= queries.size();
    CHECK(std::fabs(got - naive) < 1e-9);
  }
}

TEST_CASE("loss is invariant under candidate permutations fixing the true object") {
  const int V = 5, d = 3;
  Rng rng(3);
  Matrix h = random_matrix(V + 2, d, rng);
  std::vector<Query> queries{{0, 0, 1}};
  const double base = loss_value(h, queries, DecoderParams{}, V);

  // Swap candidate rows 2 and 4 (neither is the query subject or true object).
  Matrix permuted = h;
  for (int j = 0; j < d; ++j) {
    permuted(2, j) = h(4, j);
    permuted(4, j) = h(2, j);
  }
  CHECK(loss_value(permuted, queries, DecoderParams{}, V) ==
        doctest::Approx(base).epsilon(1e-14));
}

TEST_CASE("adam examples") {
  ModelParams dummy;
  dummy.num_entities = 1;
  dummy.num_relations = 1;
  dummy.dim = 2;
  dummy.h_global = Matrix(3, 2, 1.0);
  dummy.stack.layers.push_back(AggLayerParams::zeros(2));
  dummy.jump = JumpParams::zeros(2);
  auto refs = param_refs(dummy);
  AdamState state = AdamState::like(dummy);

  std::vector<Matrix> zeros;
  for (auto& [name, m] : refs) zeros.push_back(Matrix::zeros(m->rows(), m->cols()));
  const Matrix before = dummy.h_global;
  adam_step(refs, zeros, state, 0.1);
  CHECK(dummy.h_global == before);
  CHECK(state.step == 1);

  // First step with gradient g moves by about -lr * sign(g).
  std::vector<Matrix> grads = zeros;
  grads[0] = Matrix(3, 2, 0.0);
  grads[0](0, 0) = 0.37;
  grads[0](1, 1) = -2.2;
  AdamState fresh = AdamState::like(dummy);
  ModelParams dummy2 = dummy;
  auto refs2 = param_refs(dummy2);
  adam_step(refs2, grads, fresh, 0.01);
  CHECK(dummy2.h_global(0, 0) == doctest::Approx(1.0 - 0.01).epsilon(1e-6));
  CHECK(dummy2.h_global(1, 1) == doctest::Approx(1.0 + 0.01).epsilon(1e-6));
  CHECK(dummy2.h_global(2, 0) == 1.0);

  // Constant gradient: the long-run update magnitude approaches lr.
  ModelParams dummy3 = dummy;
  auto refs3 = param_refs(dummy3);
  AdamState longrun = AdamState::like(dummy3);
  double prev = dummy3.h_global(0, 0);
  double last_update = 0.0;
  for (int i = 0; i < 2000; ++i) {
    adam_step(refs3, grads, longrun, 0.001);
    last_update = prev - dummy3.h_global(0, 0);
    prev = dummy3.h_global(0, 0);
  }
  CHECK(last_update == doctest::Approx(0.001).epsilon(0.01));

  // Non-finite gradient aborts without touching parameters.
  grads[0](0, 1) = std::numeric_limits<double>::quiet_NaN();
  ModelParams dummy4 = dummy;
  auto refs4 = param_refs(dummy4);
  AdamState s4 = AdamState::like(dummy4);
  CHECK_THROWS_AS(adam_step(refs4, grads, s4, 0.01), NumericError);
  CHECK(dummy4.h_global == dummy.h_global);
  CHECK(s4.step == 0);
}

TEST_CASE("full model gradients pass the finite-difference check") {
  TkgData data = gradcheck_data();
  TrainConfig cfg = gradcheck_config(DecoderKind::DistMult, BackwardMode::Unrolled);
  ModelParams params = model_for(data, cfg, 7);
  const int target_t = cfg.history_length + 1;
  const std::vector<Query> queries = queries_at(data, target_t);
  REQUIRE_FALSE(queries.empty());

  std::vector<Matrix> grads = model_gradients(data, params, cfg, target_t, queries, nullptr);
  auto refs = param_refs(params);
  REQUIRE(grads.size() == refs.size());

  // Step 1e-3: the loss is O(1) but the normalized-time scaling leaves some
  // field gradients near 1e-9, far below what a 1e-6 step resolves in f64.
  double worst = 0.0;
  for (size_t i = 0; i < refs.size(); ++i) {
    Matrix& group = *refs[i].second;
    std::vector<double> x(group.data(), group.data() + group.size());
    std::vector<double> g(grads[i].data(), grads[i].data() + grads[i].size());
    auto f = [&](std::span<const double> v) {
      std::copy(v.begin(), v.end(), group.data());
      const Matrix h = infer_representation(data, params, cfg.encoder_config(), target_t);
      return loss_value(h, queries, params.decoder, params.num_entities);
    };
    worst = std::max(worst, grad_check(f, x, g, 1e-3));
    std::copy(x.begin(), x.end(), group.data());
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("interpolated adjoint matches unrolled gradients at the model level") {
  TkgData data = gradcheck_data();
  TrainConfig unrolled = gradcheck_config(DecoderKind::Tucker, BackwardMode::Unrolled);
  TrainConfig adjoint = gradcheck_config(DecoderKind::Tucker, BackwardMode::InterpolatedAdjoint);
  ModelParams params = model_for(data, unrolled, 9);
  const int target_t = 3;
  const std::vector<Query> queries = queries_at(data, target_t);

  double loss_u = 0.0, loss_a = 0.0;
  auto gu = model_gradients(data, params, unrolled, target_t, queries, &loss_u);
  auto ga = model_gradients(data, params, adjoint, target_t, queries, &loss_a);
  CHECK(loss_u == doctest::Approx(loss_a).epsilon(1e-10));

  double worst = 0.0;
  for (size_t i = 0; i < gu.size(); ++i)
    for (size_t j = 0; j < gu[i].size(); ++j) {
      const double a = gu[i].data()[j], b = ga[i].data()[j];
      worst = std::max(worst, std::fabs(a - b) / std::max(1e-12, std::fabs(a) + std::fabs(b)));
    }
  CHECK(worst < 1e-3);
}

TEST_CASE("train_epoch: frozen optimizer, determinism, learning signal") {
  PatternSpec spec;
  spec.kind = Pattern::Periodic;
  TkgData data = prepare_data(generate_synthetic_tkg(8, 2, 12, spec, 5));

  TrainConfig cfg;
  cfg.dim = 6;
  cfg.layers = 1;
  cfg.history_length = 2;
  cfg.epochs = 3;
  cfg.solver.backward_mode = BackwardMode::Unrolled;

  // Zero learning rate leaves every parameter untouched.
  {
    ModelParams params = model_for(data, cfg, 13);
    const Matrix before = params.h_global;
    AdamState state = AdamState::like(params);
    TrainConfig frozen = cfg;
    frozen.learning_rate = 0.0;
    train_epoch(data, params, state, frozen);
    CHECK(params.h_global == before);
  }

  // Same seed twice: identical loss trajectories to the last bit.
  auto run_losses = [&](uint64_t seed) {
    ModelParams params = model_for(data, cfg, seed);
    AdamState state = AdamState::like(params);
    std::vector<double> losses;
    for (int e = 0; e < 3; ++e) losses.push_back(train_epoch(data, params, state, cfg));
    return losses;
  };
  CHECK(run_losses(31) == run_losses(31));

  // The periodic store is learnable: loss strictly decreases over the first
  // epochs.
  {
    ModelParams params = model_for(data, cfg, 17);
    AdamState state = AdamState::like(params);
    double prev = train_epoch(data, params, state, cfg);
    for (int e = 1; e < 5; ++e) {
      const double cur = train_epoch(data, params, state, cfg);
      CHECK(cur < prev);
      prev = cur;
    }
  }
}

TEST_CASE("query batching does not change the loss or the gradients") {
  TkgData data = gradcheck_data();
  TrainConfig one_batch = gradcheck_config(DecoderKind::DistMult, BackwardMode::Unrolled);
  one_batch.batch_size = 1024;
  TrainConfig chunked = one_batch;
  chunked.batch_size = 3;

  ModelParams params = model_for(data, one_batch, 55);
  const int target_t = 3;
  const std::vector<Query> queries = queries_at(data, target_t);
  REQUIRE(queries.size() > 3);

  double loss_a = 0.0, loss_b = 0.0;
  auto ga = model_gradients(data, params, one_batch, target_t, queries, &loss_a);
  auto gb = model_gradients(data, params, chunked, target_t, queries, &loss_b);
  CHECK(loss_a == doctest::Approx(loss_b).epsilon(1e-12));
  for (size_t i = 0; i < ga.size(); ++i)
    for (size_t j = 0; j < ga[i].size(); ++j)
      CHECK(ga[i].data()[j] == doctest::Approx(gb[i].data()[j]).epsilon(1e-9));
}

TEST_CASE("checkpoints round trip exactly") {
  TkgData data = gradcheck_data();
  TrainConfig cfg = gradcheck_config(DecoderKind::Tucker, BackwardMode::InterpolatedAdjoint);
  cfg.seed = 99;
  ModelParams params = model_for(data, cfg, 23);

  TempDir dir("ckpt");
  const std::string path = dir.file("model.bin");
  save_checkpoint(path, params, cfg);

  TrainConfig cfg2;
  ModelParams loaded = load_checkpoint(path, &cfg2);
  CHECK(loaded.num_entities == params.num_entities);
  CHECK(loaded.num_relations == params.num_relations);
  CHECK(loaded.dim == params.dim);
  CHECK(cfg2.history_length == cfg.history_length);
  CHECK(cfg2.seed == cfg.seed);
  CHECK(loaded.jump.w == params.jump.w);

  auto a = param_refs(params);
  auto b = param_refs(loaded);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].first == b[i].first);
    CHECK(*a[i].second == *b[i].second);  // bit-exact
  }

  CHECK_THROWS_AS(load_checkpoint(dir.file("missing.bin")), IoError);
}
