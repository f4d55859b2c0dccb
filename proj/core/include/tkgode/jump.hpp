#pragma once

#include "tkgode/aggregator.hpp"
#include "tkgode/autodiff.hpp"
#include "tkgode/data.hpp"

namespace tkg {

/// Diagonal weights of the stochastic jump layer plus the fixed jump
/// coefficient. The coefficient is a hyperparameter, never trained.
struct JumpParams {
  Matrix w_ent;  // 1 x d diagonal weight for entity shifts
  Matrix w_rel;  // 1 x d diagonal weight for relation shifts
  double w = 0.1;

  static JumpParams zeros(int dim, double w = 0.1) {
    return {Matrix::zeros(1, dim), Matrix::zeros(1, dim), w};
  }
};

struct JumpVars {
  Var w_ent;
  Var w_rel;
};

JumpVars bind_jump(Tape& tape, const JumpParams& params);

/// The shift driven by triplet appearances/disappearances. Entity rows: the
/// activated mean over signed composed messages, diagonally weighted; objects
/// untouched by any delta shift by zero. Relation rows: the bare diagonal map
/// w_rel * h_r, independent of the deltas.
Var jump_layer_forward(Tape& tape, Var h, const JumpTensor& jt, const JumpVars& params,
                       int num_entities, int num_relation_rows, Activation act);

/// h_agg + w * jump_layer_forward(h_pre). The shift is computed from the
/// pre-aggregation state h_pre. w == 0 skips the jump subgraph entirely so
/// the ablation arm is bitwise identical to a jump-free model.
Var apply_jump(Tape& tape, Var h_agg, Var h_pre, const JumpTensor& jt, const JumpVars& params,
               double w, int num_entities, int num_relation_rows, Activation act);

// Value-level wrappers.
Matrix jump_layer_forward(const Matrix& h, const JumpTensor& jt, const JumpParams& params,
                          int num_entities, Activation act);
Matrix apply_jump(const Matrix& h_agg, const Matrix& h_pre, const JumpTensor& jt,
                  const JumpParams& params, int num_entities, Activation act);

}  // namespace tkg
