#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tkgode/encoder.hpp"
#include "tkgode/model.hpp"

namespace tkg {

struct TrainConfig {
  int dim = 32;
  int layers = 2;
  int history_length = 4;
  double jump_w = 0.1;
  double delta_init = 0.1;
  DecoderKind decoder = DecoderKind::DistMult;
  Activation activation = Activation::Tanh;

  double learning_rate = 1e-3;
  int epochs = 30;
  int batch_size = 256;
  uint64_t seed = 42;

  SolverConfig solver;

  EncoderConfig encoder_config() const { return {history_length, solver}; }
};

struct Query {
  int s = 0;
  int r = 0;
  int o = 0;
};

/// Mean over queries of the stabilized softmax negative log-likelihood of the
/// true object against all entities.
Var loss_taped(Tape& tape, Var h, std::span<const Query> queries, const DecoderVars& decoder,
               int num_entities);

double loss_value(const Matrix& h, std::span<const Query> queries, const DecoderParams& decoder,
                  int num_entities);

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState like(const ModelParams& params);
};

/// Standard bias-corrected Adam update. Throws NumericError on non-finite
/// gradients without touching the parameters.
void adam_step(std::vector<std::pair<std::string, Matrix*>>& params,
               const std::vector<Matrix>& grads, AdamState& state, double lr);

/// Gradients of the full model (encoder + decoder + loss) for one prediction
/// timestamp, in param_refs order. Both backward modes are supported and
/// agree to interpolation accuracy.
std::vector<Matrix> model_gradients(const TkgData& data, const ModelParams& params,
                                    const TrainConfig& cfg, int target_t,
                                    std::span<const Query> queries, double* loss_out = nullptr);

/// One pass over the training timestamps with at least a full history window:
/// per timestamp, infer the hidden state, take the loss over that timestamp's
/// queries, and apply one Adam step. Returns the query-weighted mean loss.
double train_epoch(const TkgData& data, ModelParams& params, AdamState& state,
                   const TrainConfig& cfg);

void save_checkpoint(const std::string& path, const ModelParams& params,
                     const TrainConfig& cfg);
ModelParams load_checkpoint(const std::string& path, TrainConfig* cfg_out = nullptr);

/// Queries (s, r, o) of all augmented events at a timestamp.
std::vector<Query> queries_at(const TkgData& data, int t);

}  // namespace tkg
