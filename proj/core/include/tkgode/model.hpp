#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "tkgode/aggregator.hpp"
#include "tkgode/decoder.hpp"
#include "tkgode/jump.hpp"
#include "tkgode/rng.hpp"

namespace tkg {

/// Everything trainable plus the fixed hyperparameters baked into shapes:
/// the global embedding, the aggregation stack, the jump layer, and the
/// decoder.
struct ModelParams {
  int num_entities = 0;
  int num_relations = 0;  // pre-augmentation
  int dim = 0;

  Matrix h_global;  // (num_entities + 2 * num_relations) x dim
  AggStack stack;
  JumpParams jump;
  DecoderParams decoder;

  int relation_rows() const { return 2 * num_relations; }
  int state_rows() const { return num_entities + relation_rows(); }

  static ModelParams init(int num_entities, int num_relations, int dim, int layers,
                          DecoderKind decoder, double jump_w, double delta_init, Rng& rng);
};

/// Canonical (name, matrix) enumeration of the trainable parameters. The
/// order is shared by the optimizer, both backward paths, checkpointing, and
/// the gradient-check report.
std::vector<std::pair<std::string, Matrix*>> param_refs(ModelParams& params);
std::vector<std::pair<std::string, const Matrix*>> param_refs(const ModelParams& params);

/// Index of the first DerivativeNet parameter inside param_refs order
/// (h_global comes first, decoder parameters last).
inline constexpr int kFieldParamsOffset = 1;

/// Number of DerivativeNet parameters for a given layer count.
inline int field_param_count(const ModelParams& p) {
  return static_cast<int>(3 * p.stack.layers.size()) + 2;
}

/// Uniform Xavier/Glorot fill over a matrix.
void xavier_fill(Matrix& m, Rng& rng);

}  // namespace tkg
