#include "tkgode/aggregator.hpp"

namespace tkg {

std::vector<double> compose(std::span<const double> h_s, std::span<const double> h_r) {
  if (h_s.size() != h_r.size()) throw DimError("compose: dimension mismatch");
  std::vector<double> out(h_s.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = h_s[i] * h_r[i];
  return out;
}

namespace {

Var activate(Tape& tape, Var x, Activation act) {
  return act == Activation::Tanh ? tape.tanh(x) : x;
}

}  // namespace

Var agg_layer_forward(Tape& tape, Var h, const Snapshot& snapshot, const AggLayerVars& params,
                      int num_entities, int num_relation_rows, Activation act) {
  const int total_rows = num_entities + num_relation_rows;
  if (h.rows != total_rows) throw DimError("agg_layer_forward: hidden state row count");

  // Relation rows: bare linear map, scattered back into their own slots.
  std::vector<int> rel_rows(num_relation_rows);
  for (int r = 0; r < num_relation_rows; ++r) rel_rows[r] = num_entities + r;
  Var rel_block = tape.gather_rows(h, rel_rows);
  Var rel_out = tape.matmul(rel_block, params.w_rel);
  Var out = tape.scatter_mean_rows(rel_out, rel_rows, total_rows);

  if (!snapshot.edges.empty()) {
    std::vector<int> src, rel, dst;
    src.reserve(snapshot.edges.size());
    rel.reserve(snapshot.edges.size());
    dst.reserve(snapshot.edges.size());
    for (const auto& e : snapshot.edges) {
      if (e.s < 0 || e.s >= num_entities || e.o < 0 || e.o >= num_entities ||
          e.r < 0 || e.r >= num_relation_rows)
        throw IndexError("agg_layer_forward: edge references out-of-range row");
      src.push_back(e.s);
      rel.push_back(num_entities + e.r);
      dst.push_back(e.o);
    }
    Var messages = tape.hadamard(tape.gather_rows(h, src), tape.gather_rows(h, rel));
    messages = tape.matmul(messages, params.w_ent);
    Var pooled = tape.scatter_mean_rows(messages, dst, total_rows);
    out = tape.add(out, activate(tape, pooled, act));
  }
  // With no edges the entity rows stay zero: the mean over an empty
  // neighbourhood is zero and both activations fix zero.
  return out;
}

Var residual_layer_forward(Tape& tape, Var h, const Snapshot& snapshot,
                           const AggLayerVars& params, int num_entities, int num_relation_rows,
                           Activation act) {
  Var f = agg_layer_forward(tape, h, snapshot, params, num_entities, num_relation_rows, act);
  return tape.add(h, tape.scale(f, params.delta));
}

Var stack_forward(Tape& tape, Var h, const Snapshot& snapshot,
                  std::span<const AggLayerVars> layers, int num_entities, int num_relation_rows,
                  Activation act) {
  if (layers.empty()) throw ContractError("stack_forward: at least one layer required");
  Var cur = h;
  for (const auto& layer : layers)
    cur = residual_layer_forward(tape, cur, snapshot, layer, num_entities, num_relation_rows, act);
  return cur;
}

AggLayerVars bind_layer(Tape& tape, const AggLayerParams& params) {
  return {tape.leaf(params.w_ent), tape.leaf(params.w_rel), tape.leaf(params.delta)};
}

Matrix agg_layer_forward(const Matrix& h, const Snapshot& snapshot, const AggLayerParams& params,
                         int num_entities, Activation act) {
  Tape tape;
  Var hv = tape.leaf(h);
  Var out = agg_layer_forward(tape, hv, snapshot, bind_layer(tape, params), num_entities,
                              h.rows() - num_entities, act);
  return tape.value(out);
}

Matrix residual_layer_forward(const Matrix& h, const Snapshot& snapshot,
                              const AggLayerParams& params, int num_entities, Activation act) {
  Tape tape;
  Var hv = tape.leaf(h);
  Var out = residual_layer_forward(tape, hv, snapshot, bind_layer(tape, params), num_entities,
                                   h.rows() - num_entities, act);
  return tape.value(out);
}

Matrix stack_forward(const Matrix& h, const Snapshot& snapshot, const AggStack& stack,
                     int num_entities) {
  Tape tape;
  Var hv = tape.leaf(h);
  std::vector<AggLayerVars> layer_vars;
  layer_vars.reserve(stack.layers.size());
  for (const auto& l : stack.layers) layer_vars.push_back(bind_layer(tape, l));
  Var out = stack_forward(tape, hv, snapshot, layer_vars, num_entities,
                          h.rows() - num_entities, stack.activation);
  return tape.value(out);
}

}  // namespace tkg
