#pragma once

#include <span>
#include <vector>

#include "tkgode/autodiff.hpp"
#include "tkgode/data.hpp"

namespace tkg {

enum class Activation { Tanh, Identity };

/// One relational aggregation layer: a d x d entity message weight, a d x d
/// relation weight, and the residual gate.
struct AggLayerParams {
  Matrix w_ent;
  Matrix w_rel;
  Matrix delta;  // 1x1 residual gate

  static AggLayerParams zeros(int dim) {
    return {Matrix::zeros(dim, dim), Matrix::zeros(dim, dim), Matrix::zeros(1, 1)};
  }
};

struct AggStack {
  std::vector<AggLayerParams> layers;
  Activation activation = Activation::Tanh;
};

/// Tape handles for one layer's parameters.
struct AggLayerVars {
  Var w_ent;
  Var w_rel;
  Var delta;
};

/// Elementwise composition of a subject row with a relation row.
std::vector<double> compose(std::span<const double> h_s, std::span<const double> h_r);

/// One aggregation layer over the full hidden state (entities then
/// relations). Entity rows become the activated mean over in-neighbour
/// messages W_ent (h_s * h_r); empty neighbourhoods yield zero rows. Relation
/// rows get the bare linear update W_rel h_r.
Var agg_layer_forward(Tape& tape, Var h, const Snapshot& snapshot, const AggLayerVars& params,
                      int num_entities, int num_relation_rows, Activation act);

/// h + delta * agg_layer_forward(h).
Var residual_layer_forward(Tape& tape, Var h, const Snapshot& snapshot,
                           const AggLayerVars& params, int num_entities, int num_relation_rows,
                           Activation act);

Var stack_forward(Tape& tape, Var h, const Snapshot& snapshot,
                  std::span<const AggLayerVars> layers, int num_entities, int num_relation_rows,
                  Activation act);

AggLayerVars bind_layer(Tape& tape, const AggLayerParams& params);

// Value-level convenience wrappers (record on a scratch tape internally).
Matrix agg_layer_forward(const Matrix& h, const Snapshot& snapshot, const AggLayerParams& params,
                         int num_entities, Activation act);
Matrix residual_layer_forward(const Matrix& h, const Snapshot& snapshot,
                              const AggLayerParams& params, int num_entities, Activation act);
Matrix stack_forward(const Matrix& h, const Snapshot& snapshot, const AggStack& stack,
                     int num_entities);

}  // namespace tkg
