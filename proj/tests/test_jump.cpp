#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "tkgode/jump.hpp"

using namespace tkg;
using test::random_matrix;

namespace {

// Naive reference over a dense |V| x R x |V| grid.
Matrix dense_jump_oracle(const Matrix& h, const JumpTensor& jt, const JumpParams& p,
                         int num_entities, Activation act) {
  const int d = h.cols();
  Matrix out(h.rows(), d, 0.0);
  for (int o = 0; o < num_entities; ++o) {
    std::vector<std::pair<int, double>> terms;  // (source index into deltas, sign)
    std::vector<const JumpTensor::Delta*> mine;
    for (const auto& dd : jt.deltas)
      if (dd.o == o) mine.push_back(&dd);
    if (mine.empty()) continue;
    for (int j = 0; j < d; ++j) {
      double acc = 0.0;
      for (const auto* dd : mine)
        acc += p.w_ent(0, j) * dd->sign * h(dd->s, j) * h(num_entities + dd->r, j);
      const double mean = acc / mine.size();
      out(o, j) = act == Activation::Tanh ? std::tanh(mean) : mean;
    }
  }
  for (int r = num_entities; r < h.rows(); ++r)
    for (int j = 0; j < d; ++j) out(r, j) = p.w_rel(0, j) * h(r, j);
  return out;
}

JumpTensor tensor_from(std::vector<JumpTensor::Delta> deltas) {
  JumpTensor jt;
  jt.deltas = std::move(deltas);
  for (size_t i = 0; i < jt.deltas.size(); ++i)
    jt.by_object[jt.deltas[i].o].push_back(static_cast<int>(i));
  return jt;
}

}  // namespace

TEST_CASE("empty jump tensor shifts no entity rows") {
  const int V = 4, d = 3;
  Rng rng(2);
  Matrix h = random_matrix(V + 2, d, rng);
  JumpParams p{random_matrix(1, d, rng), random_matrix(1, d, rng), 0.1};
  Matrix shift = jump_layer_forward(h, JumpTensor{}, p, V, Activation::Tanh);
  for (int i = 0; i < V; ++i)
    for (int j = 0; j < d; ++j) CHECK(shift(i, j) == 0.0);
  // Relation rows still follow the diagonal map.
  for (int i = V; i < h.rows(); ++i)
    for (int j = 0; j < d; ++j)
      CHECK(shift(i, j) == doctest::Approx(p.w_rel(0, j) * h(i, j)));
}

TEST_CASE("single +1 delta with unit weights in identity mode") {
  const int V = 3, d = 2;
  Rng rng(4);
  Matrix h = random_matrix(V + 2, d, rng);
  JumpParams p{Matrix::ones(1, d), random_matrix(1, d, rng), 0.1};
  JumpTensor jt = tensor_from({{0, 1, 2, +1}});  // s=0, r=1, o=2

  Matrix shift = jump_layer_forward(h, jt, p, V, Activation::Identity);
  for (int j = 0; j < d; ++j)
    CHECK(shift(2, j) == doctest::Approx(h(0, j) * h(V + 1, j)));

  // Same delta with sign -1 negates the pre-activation shift; under tanh the
  // shift is tanh of the negation.
  JumpTensor neg = tensor_from({{0, 1, 2, -1}});
  Matrix shift_neg = jump_layer_forward(h, neg, p, V, Activation::Identity);
  for (int j = 0; j < d; ++j) CHECK(shift_neg(2, j) == doctest::Approx(-shift(2, j)));
  Matrix tanh_neg = jump_layer_forward(h, neg, p, V, Activation::Tanh);
  for (int j = 0; j < d; ++j)
    CHECK(tanh_neg(2, j) == doctest::Approx(std::tanh(-h(0, j) * h(V + 1, j))));
}

TEST_CASE("dense-loop oracle over a 5x2x5 grid") {
  const int V = 5, R = 2, d = 4;
  Rng rng(8);
  std::vector<JumpTensor::Delta> deltas;
  for (int i = 0; i < 12; ++i) {
    JumpTensor::Delta dd{rng.next_int(V), rng.next_int(2 * R), rng.next_int(V),
                          rng.next_double() < 0.5 ? 1 : -1};
    deltas.push_back(dd);
  }
  JumpTensor jt = tensor_from(deltas);
  Matrix h = random_matrix(V + 2 * R, d, rng);
  JumpParams p{random_matrix(1, d, rng), random_matrix(1, d, rng), 0.3};

  Matrix got = jump_layer_forward(h, jt, p, V, Activation::Tanh);
  Matrix want = dense_jump_oracle(h, jt, p, V, Activation::Tanh);
  for (size_t i = 0; i < got.size(); ++i)
    CHECK(got.data()[i] == doctest::Approx(want.data()[i]).epsilon(1e-12));

  // Full composition (aggregated state plus weighted shift) against the
  // same oracle.
  Matrix h_agg = random_matrix(V + 2 * R, d, rng);
  Matrix applied = apply_jump(h_agg, h, jt, p, V, Activation::Tanh);
  for (size_t i = 0; i < applied.size(); ++i)
    CHECK(applied.data()[i] ==
          doctest::Approx(h_agg.data()[i] + p.w * want.data()[i]).epsilon(1e-12));
}

TEST_CASE("w = 0 is the ablation identity") {
  const int V = 4, d = 3;
  Rng rng(10);
  Matrix h_agg = random_matrix(V + 2, d, rng);
  Matrix h_pre = random_matrix(V + 2, d, rng);
  JumpParams p{random_matrix(1, d, rng), random_matrix(1, d, rng), 0.0};
  JumpTensor jt = tensor_from({{0, 0, 1, +1}, {2, 1, 3, -1}});
  CHECK(apply_jump(h_agg, h_pre, jt, p, V, Activation::Tanh) == h_agg);

  JumpParams active = p;
  active.w = 0.2;
  JumpTensor out_of_range = tensor_from({{0, 0, 9, +1}});
  CHECK_THROWS_AS(apply_jump(h_agg, h_pre, out_of_range, active, V, Activation::Tanh),
                  IndexError);
}

TEST_CASE("empty tensor with positive w shifts only relation rows") {
  const int V = 3, d = 2;
  Rng rng(12);
  Matrix h_agg = random_matrix(V + 2, d, rng);
  Matrix h_pre = random_matrix(V + 2, d, rng);
  JumpParams p{random_matrix(1, d, rng), random_matrix(1, d, rng), 0.7};
  Matrix out = apply_jump(h_agg, h_pre, JumpTensor{}, p, V, Activation::Tanh);
  for (int i = 0; i < V; ++i)
    for (int j = 0; j < d; ++j) CHECK(out(i, j) == h_agg(i, j));
  for (int i = V; i < h_agg.rows(); ++i)
    for (int j = 0; j < d; ++j)
      CHECK(out(i, j) == doctest::Approx(h_agg(i, j) + 0.7 * p.w_rel(0, j) * h_pre(i, j)));
}

TEST_CASE("shift is invariant under delta permutation and flips with sign") {
  const int V = 4, d = 3;
  Rng rng(14);
  Matrix h = random_matrix(V + 2, d, rng);
  JumpParams p{random_matrix(1, d, rng), random_matrix(1, d, rng), 0.1};
  std::vector<JumpTensor::Delta> deltas = {
      {0, 0, 2, +1}, {1, 1, 2, -1}, {3, 0, 2, +1}, {1, 0, 0, -1}};

  Matrix base = jump_layer_forward(h, tensor_from(deltas), p, V, Activation::Tanh);
  std::vector<JumpTensor::Delta> shuffled = {deltas[2], deltas[0], deltas[3], deltas[1]};
  Matrix perm = jump_layer_forward(h, tensor_from(shuffled), p, V, Activation::Tanh);
  CHECK(base == perm);

  // Negating every sign negates the pre-activation entity shift exactly.
  std::vector<JumpTensor::Delta> negated = deltas;
  for (auto& dd : negated) dd.sign = -dd.sign;
  Matrix pos = jump_layer_forward(h, tensor_from(deltas), p, V, Activation::Identity);
  Matrix neg = jump_layer_forward(h, tensor_from(negated), p, V, Activation::Identity);
  for (int i = 0; i < V; ++i)
    for (int j = 0; j < d; ++j) CHECK(neg(i, j) == doctest::Approx(-pos(i, j)));
}

TEST_CASE("jump gradients match finite differences") {
  const int V = 4, R = 1, d = 3;
  Rng rng(16);
  Matrix h = random_matrix(V + 2 * R, d, rng);
  JumpParams p{random_matrix(1, d, rng), random_matrix(1, d, rng), 0.25};
  JumpTensor jt = tensor_from({{0, 0, 1, +1}, {2, 1, 1, -1}, {3, 0, 2, +1}});
  Matrix weights = random_matrix(V + 2 * R, d, rng);

  auto forward = [&](const JumpParams& q) {
    Matrix out = jump_layer_forward(h, jt, q, V, Activation::Tanh);
    double acc = 0.0;
    for (size_t i = 0; i < out.size(); ++i) acc += out.data()[i] * weights.data()[i];
    return acc;
  };

  Tape tape;
  Var hv = tape.leaf(h);
  JumpVars vars = bind_jump(tape, p);
  Var out = jump_layer_forward(tape, hv, jt, vars, V, 2 * R, Activation::Tanh);
  Gradients g = tape.backward(tape.sum(tape.hadamard(out, tape.leaf(weights))));

  const double eps = 1e-6;
  double worst = 0.0;
  auto check_matrix = [&](Matrix JumpParams::*field, Var var) {
    const Matrix& grad = g.at(var);
    for (size_t i = 0; i < (p.*field).size(); ++i) {
      JumpParams mod = p;
      (mod.*field).data()[i] += eps;
      const double fp = forward(mod);
      (mod.*field).data()[i] -= 2 * eps;
      const double fm = forward(mod);
      const double fd = (fp - fm) / (2 * eps);
      const double denom = std::max(1e-12, std::fabs(fd) + std::fabs(grad.data()[i]));
      worst = std::max(worst, std::fabs(fd - grad.data()[i]) / denom);
    }
  };
  check_matrix(&JumpParams::w_ent, vars.w_ent);
  check_matrix(&JumpParams::w_rel, vars.w_rel);
  CHECK(worst < 1e-5);
}
