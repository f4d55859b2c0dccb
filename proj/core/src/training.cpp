#include "tkgode/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace tkg {

std::vector<Query> queries_at(const TkgData& data, int t) {
  std::vector<Query> out;
  auto lo = std::lower_bound(data.store.events.begin(), data.store.events.end(), t,
                             [](const Quadruple& q, int key) { return q.t < key; });
  for (auto it = lo; it != data.store.events.end() && it->t == t; ++it)
    out.push_back({it->s, it->r, it->o});
  return out;
}

Var loss_taped(Tape& tape, Var h, std::span<const Query> queries, const DecoderVars& decoder,
               int num_entities) {
  if (queries.empty()) throw ContractError("loss: empty query list");
  std::vector<int> s_ids, r_ids, targets;
  s_ids.reserve(queries.size());
  r_ids.reserve(queries.size());
  targets.reserve(queries.size());
  for (const auto& q : queries) {
    s_ids.push_back(q.s);
    r_ids.push_back(q.r);
    targets.push_back(q.o);
  }
  Var scores = score_queries_taped(tape, h, s_ids, r_ids, decoder, num_entities);
  return tape.softmax_cross_entropy(scores, std::move(targets));
}

double loss_value(const Matrix& h, std::span<const Query> queries, const DecoderParams& decoder,
                  int num_entities) {
  Tape tape;
  Var hv = tape.leaf(h);
  DecoderVars dv = bind_decoder(tape, decoder);
  return tape.value(loss_taped(tape, hv, queries, dv, num_entities))(0, 0);
}

AdamState AdamState::like(const ModelParams& params) {
  AdamState state;
  for (const auto& [name, mat] : param_refs(params)) {
    state.m.push_back(Matrix::zeros(mat->rows(), mat->cols()));
    state.v.push_back(Matrix::zeros(mat->rows(), mat->cols()));
  }
  return state;
}

void adam_step(std::vector<std::pair<std::string, Matrix*>>& params,
               const std::vector<Matrix>& grads, AdamState& state, double lr) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw DimError("adam_step: parameter/gradient/state count mismatch");
  for (const Matrix& g : grads)
    if (!all_finite(g)) throw NumericError("adam_step: non-finite gradient, step aborted");

  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (size_t i = 0; i < params.size(); ++i) {
    Matrix& p = *params[i].second;
    const Matrix& g = grads[i];
    Matrix& m = state.m[i];
    Matrix& v = state.v[i];
    if (!p.same_shape(g)) throw DimError("adam_step: gradient shape mismatch at " + params[i].first);
    for (size_t j = 0; j < p.size(); ++j) {
      const double gj = g.data()[j];
      m.data()[j] = state.beta1 * m.data()[j] + (1.0 - state.beta1) * gj;
      v.data()[j] = state.beta2 * v.data()[j] + (1.0 - state.beta2) * gj * gj;
      const double mhat = m.data()[j] / bc1;
      const double vhat = v.data()[j] / bc2;
      p.data()[j] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

namespace {

std::vector<std::span<const Query>> make_batches(std::span<const Query> queries,
                                                 int batch_size) {
  std::vector<std::span<const Query>> batches;
  const size_t bs = batch_size > 0 ? static_cast<size_t>(batch_size) : queries.size();
  for (size_t at = 0; at < queries.size(); at += bs)
    batches.push_back(queries.subspan(at, std::min(bs, queries.size() - at)));
  return batches;
}

std::vector<Matrix> gradients_unrolled(const TkgData& data, const ModelParams& params,
                                       const TrainConfig& cfg, int target_t,
                                       std::span<const Query> queries, double* loss_out) {
  Tape tape;
  Var h_global = tape.leaf(params.h_global);
  std::vector<Var> field_params;
  for (const auto& layer : params.stack.layers) {
    field_params.push_back(tape.leaf(layer.w_ent));
    field_params.push_back(tape.leaf(layer.w_rel));
    field_params.push_back(tape.leaf(layer.delta));
  }
  field_params.push_back(tape.leaf(params.jump.w_ent));
  field_params.push_back(tape.leaf(params.jump.w_rel));
  DecoderVars decoder = bind_decoder(tape, params.decoder);

  Var h = infer_representation_taped(tape, data, params, cfg.encoder_config(), target_t,
                                     h_global, field_params);

  const auto batches = make_batches(queries, cfg.batch_size);
  Var total;
  bool first = true;
  for (const auto& batch : batches) {
    Var part = loss_taped(tape, h, batch, decoder, params.num_entities);
    const double weight = static_cast<double>(batch.size()) / queries.size();
    Var weighted = tape.scale(part, tape.leaf(Matrix(1, 1, weight)));
    total = first ? weighted : tape.add(total, weighted);
    first = false;
  }
  if (loss_out != nullptr) *loss_out = tape.value(total)(0, 0);

  Gradients grads = tape.backward(total);
  std::vector<Matrix> out;
  out.push_back(grads.at(h_global));
  for (const Var& p : field_params) out.push_back(grads.at(p));
  if (decoder.has_core) out.push_back(grads.at(decoder.core));
  return out;
}

std::vector<Matrix> gradients_adjoint(const TkgData& data, const ModelParams& params,
                                      const TrainConfig& cfg, int target_t,
                                      std::span<const Query> queries, double* loss_out) {
  EncoderForward fwd = infer_with_traces(data, params, cfg.encoder_config(),
                                         plan_intervals(data, cfg.history_length, target_t));

  // Loss gradients w.r.t. the final hidden state and the decoder parameters.
  Matrix dh(fwd.h_out.rows(), fwd.h_out.cols(), 0.0);
  Matrix dcore;
  if (params.decoder.has_core())
    dcore = Matrix::zeros(params.decoder.core.rows(), params.decoder.core.cols());
  double total_loss = 0.0;
  for (const auto& batch : make_batches(queries, cfg.batch_size)) {
    Tape tape;
    Var h = tape.leaf(fwd.h_out);
    DecoderVars decoder = bind_decoder(tape, params.decoder);
    Var loss = loss_taped(tape, h, batch, decoder, params.num_entities);
    const double weight = static_cast<double>(batch.size()) / queries.size();
    total_loss += weight * tape.value(loss)(0, 0);
    Gradients grads = tape.backward(loss);
    axpy(weight, grads.at(h), dh);
    if (decoder.has_core) axpy(weight, grads.at(decoder.core), dcore);
  }
  if (loss_out != nullptr) *loss_out = total_loss;

  // Chain the adjoint backward through the intervals.
  DerivativeNet net(params.stack, params.jump, params.num_entities, params.relation_rows());
  static const JumpTensor kEmptyJump;
  const int nfield = field_param_count(params);
  std::vector<Matrix> field_grads;
  Matrix a = std::move(dh);
  for (size_t i = fwd.plan.size(); i-- > 0;) {
    const IntervalPlan& iv = fwd.plan[i];
    net.set_graph(data.snapshots[iv.snapshot_t]);
    net.set_jump(iv.jump_t >= 0 ? data.jumps[iv.jump_t] : kEmptyJump);
    AdjointResult res = backward_interpolated_adjoint(net, fwd.traces[i], a, cfg.solver);
    a = std::move(res.state_grad);
    if (field_grads.empty()) {
      field_grads = std::move(res.param_grads);
    } else {
      for (int p = 0; p < nfield; ++p) axpy(1.0, res.param_grads[p], field_grads[p]);
    }
  }

  std::vector<Matrix> out;
  out.push_back(std::move(a));  // dL/dH_global: the adjoint at the start of history
  for (auto& g : field_grads) out.push_back(std::move(g));
  if (params.decoder.has_core()) out.push_back(std::move(dcore));
  return out;
}

}  // namespace

std::vector<Matrix> model_gradients(const TkgData& data, const ModelParams& params,
                                    const TrainConfig& cfg, int target_t,
                                    std::span<const Query> queries, double* loss_out) {
  if (queries.empty()) throw ContractError("model_gradients: empty query list");
  if (cfg.solver.backward_mode == BackwardMode::Unrolled)
    return gradients_unrolled(data, params, cfg, target_t, queries, loss_out);
  return gradients_adjoint(data, params, cfg, target_t, queries, loss_out);
}

double train_epoch(const TkgData& data, ModelParams& params, AdamState& state,
                   const TrainConfig& cfg) {
  auto refs = param_refs(params);
  double loss_sum = 0.0;
  long query_count = 0;
  const int first_target = cfg.history_length + 1;
  for (int target_t = first_target; target_t < data.store.train_end_t; ++target_t) {
    const std::vector<Query> queries = queries_at(data, target_t);
    if (queries.empty()) continue;
    double loss = 0.0;
    std::vector<Matrix> grads = model_gradients(data, params, cfg, target_t, queries, &loss);
    adam_step(refs, grads, state, cfg.learning_rate);
    loss_sum += loss * static_cast<double>(queries.size());
    query_count += static_cast<long>(queries.size());
  }
  if (query_count == 0)
    throw ContractError("train_epoch: no training timestamp has a full history window");
  return loss_sum / query_count;
}

namespace {

constexpr uint32_t kMagic = 0x43474B54;  // "TKGC"
constexpr uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError("checkpoint: truncated file");
  return v;
}

void put_string(std::ofstream& out, const std::string& s) {
  put<uint32_t>(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::ifstream& in) {
  const uint32_t n = get<uint32_t>(in);
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw IoError("checkpoint: truncated file");
  return s;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& params,
                     const TrainConfig& cfg) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  put(out, kMagic);
  put(out, kVersion);
  put<int32_t>(out, params.num_entities);
  put<int32_t>(out, params.num_relations);
  put<int32_t>(out, params.dim);
  put<int32_t>(out, static_cast<int32_t>(params.stack.layers.size()));
  put<int32_t>(out, params.decoder.kind == DecoderKind::Tucker ? 1 : 0);
  put<int32_t>(out, cfg.history_length);
  put<int32_t>(out, cfg.solver.steps_per_interval);
  put<int32_t>(out, cfg.solver.chebyshev_nodes);
  put<int32_t>(out, cfg.solver.backward_mode == BackwardMode::Unrolled ? 0 : 1);
  put<int32_t>(out, params.stack.activation == Activation::Tanh ? 0 : 1);
  put<double>(out, params.jump.w);
  put<double>(out, cfg.learning_rate);
  put<uint64_t>(out, cfg.seed);

  const auto refs = param_refs(params);
  put<uint32_t>(out, static_cast<uint32_t>(refs.size()));
  for (const auto& [name, mat] : refs) {
    put_string(out, name);
    put<int32_t>(out, mat->rows());
    put<int32_t>(out, mat->cols());
    out.write(reinterpret_cast<const char*>(mat->data()),
              static_cast<std::streamsize>(mat->size() * sizeof(double)));
  }
  if (!out) throw IoError("checkpoint write failed: " + path);
}

ModelParams load_checkpoint(const std::string& path, TrainConfig* cfg_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  if (get<uint32_t>(in) != kMagic) throw ParseError("checkpoint: bad magic");
  if (get<uint32_t>(in) != kVersion) throw ParseError("checkpoint: unsupported version");

  ModelParams p;
  p.num_entities = get<int32_t>(in);
  p.num_relations = get<int32_t>(in);
  p.dim = get<int32_t>(in);
  const int layers = get<int32_t>(in);
  p.decoder.kind = get<int32_t>(in) == 1 ? DecoderKind::Tucker : DecoderKind::DistMult;
  TrainConfig cfg;
  cfg.dim = p.dim;
  cfg.layers = layers;
  cfg.decoder = p.decoder.kind;
  cfg.history_length = get<int32_t>(in);
  cfg.solver.steps_per_interval = get<int32_t>(in);
  cfg.solver.chebyshev_nodes = get<int32_t>(in);
  cfg.solver.backward_mode =
      get<int32_t>(in) == 0 ? BackwardMode::Unrolled : BackwardMode::InterpolatedAdjoint;
  p.stack.activation = get<int32_t>(in) == 0 ? Activation::Tanh : Activation::Identity;
  cfg.activation = p.stack.activation;
  p.jump.w = get<double>(in);
  cfg.jump_w = p.jump.w;
  cfg.learning_rate = get<double>(in);
  cfg.seed = get<uint64_t>(in);

  p.stack.layers.resize(layers);
  const uint32_t count = get<uint32_t>(in);
  auto refs = param_refs(p);
  if (count != refs.size()) throw ParseError("checkpoint: parameter count mismatch");
  for (auto& [name, mat] : refs) {
    const std::string stored = get_string(in);
    if (stored != name) throw ParseError("checkpoint: expected parameter " + name + ", found " + stored);
    const int rows = get<int32_t>(in);
    const int cols = get<int32_t>(in);
    *mat = Matrix(rows, cols);
    in.read(reinterpret_cast<char*>(mat->data()),
            static_cast<std::streamsize>(mat->size() * sizeof(double)));
    if (!in) throw IoError("checkpoint: truncated parameter data");
  }
  if (cfg_out != nullptr) *cfg_out = cfg;
  return p;
}

}  // namespace tkg
