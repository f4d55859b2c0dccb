#include "tkgode/jump.hpp"

namespace tkg {

JumpVars bind_jump(Tape& tape, const JumpParams& params) {
  return {tape.leaf(params.w_ent), tape.leaf(params.w_rel)};
}

Var jump_layer_forward(Tape& tape, Var h, const JumpTensor& jt, const JumpVars& params,
                       int num_entities, int num_relation_rows, Activation act) {
  const int total_rows = num_entities + num_relation_rows;
  if (h.rows != total_rows) throw DimError("jump_layer_forward: hidden state row count");
  const int dim = h.cols;

  // Relation shift: diagonal map of the relation block, no delta dependence.
  std::vector<int> rel_rows(num_relation_rows);
  for (int r = 0; r < num_relation_rows; ++r) rel_rows[r] = num_entities + r;
  Var rel_shift = tape.hadamard(tape.gather_rows(h, rel_rows), params.w_rel);
  Var out = tape.scatter_mean_rows(rel_shift, rel_rows, total_rows);

  if (!jt.deltas.empty()) {
    std::vector<int> src, rel, dst;
    Matrix signs(static_cast<int>(jt.deltas.size()), dim);
    int i = 0;
    for (const auto& d : jt.deltas) {
      if (d.s < 0 || d.s >= num_entities || d.o < 0 || d.o >= num_entities ||
          d.r < 0 || d.r >= num_relation_rows)
        throw IndexError("jump_layer_forward: delta references out-of-range id");
      src.push_back(d.s);
      rel.push_back(num_entities + d.r);
      dst.push_back(d.o);
      for (int j = 0; j < dim; ++j) signs(i, j) = static_cast<double>(d.sign);
      ++i;
    }
    Var composed = tape.hadamard(tape.gather_rows(h, src), tape.gather_rows(h, rel));
    Var signed_msgs = tape.hadamard(composed, tape.leaf(std::move(signs)));
    Var weighted = tape.hadamard(signed_msgs, params.w_ent);
    Var pooled = tape.scatter_mean_rows(weighted, dst, total_rows);
    Var ent_shift = act == Activation::Tanh ? tape.tanh(pooled) : pooled;
    out = tape.add(out, ent_shift);
  }
  return out;
}

Var apply_jump(Tape& tape, Var h_agg, Var h_pre, const JumpTensor& jt, const JumpVars& params,
               double w, int num_entities, int num_relation_rows, Activation act) {
  if (h_agg.rows != h_pre.rows || h_agg.cols != h_pre.cols)
    throw DimError("apply_jump: shape mismatch");
  if (w == 0.0) return h_agg;
  Var shift = jump_layer_forward(tape, h_pre, jt, params, num_entities, num_relation_rows, act);
  Var w_leaf = tape.leaf(Matrix(1, 1, w));
  return tape.add(h_agg, tape.scale(shift, w_leaf));
}

Matrix jump_layer_forward(const Matrix& h, const JumpTensor& jt, const JumpParams& params,
                          int num_entities, Activation act) {
  Tape tape;
  Var hv = tape.leaf(h);
  Var out = jump_layer_forward(tape, hv, jt, bind_jump(tape, params), num_entities,
                               h.rows() - num_entities, act);
  return tape.value(out);
}

Matrix apply_jump(const Matrix& h_agg, const Matrix& h_pre, const JumpTensor& jt,
                  const JumpParams& params, int num_entities, Activation act) {
  Tape tape;
  Var agg = tape.leaf(h_agg);
  Var pre = tape.leaf(h_pre);
  Var out = apply_jump(tape, agg, pre, jt, bind_jump(tape, params), params.w, num_entities,
                       h_agg.rows() - num_entities, act);
  return tape.value(out);
}

}  // namespace tkg
