#include "tkgode/model.hpp"

#include <cmath>

namespace tkg {

void xavier_fill(Matrix& m, Rng& rng) {
  const double limit = std::sqrt(6.0 / (m.rows() + m.cols()));
  for (size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-limit, limit);
}

ModelParams ModelParams::init(int num_entities, int num_relations, int dim, int layers,
                              DecoderKind decoder, double jump_w, double delta_init, Rng& rng) {
  if (num_entities < 1 || num_relations < 1 || dim < 1 || layers < 1)
    throw ConfigError("ModelParams::init: all sizes must be >= 1");
  ModelParams p;
  p.num_entities = num_entities;
  p.num_relations = num_relations;
  p.dim = dim;

  p.h_global = Matrix(p.state_rows(), dim);
  xavier_fill(p.h_global, rng);

  p.stack.layers.resize(layers);
  for (auto& layer : p.stack.layers) {
    layer.w_ent = Matrix(dim, dim);
    layer.w_rel = Matrix(dim, dim);
    xavier_fill(layer.w_ent, rng);
    xavier_fill(layer.w_rel, rng);
    layer.delta = Matrix(1, 1, delta_init);
  }

  // Jump weights start at zero: the jump-enabled model is exactly its
  // ablation at initialization and grows the pathway only where gradients
  // ask for it. Gradients through both weights are nonzero at zero.
  p.jump.w_ent = Matrix::zeros(1, dim);
  p.jump.w_rel = Matrix::zeros(1, dim);
  p.jump.w = jump_w;

  p.decoder.kind = decoder;
  if (decoder == DecoderKind::Tucker) {
    p.decoder.core = Matrix(dim * dim, dim);
    for (size_t i = 0; i < p.decoder.core.size(); ++i)
      p.decoder.core.data()[i] = rng.uniform(-0.1, 0.1);
  }
  return p;
}

std::vector<std::pair<std::string, Matrix*>> param_refs(ModelParams& params) {
  std::vector<std::pair<std::string, Matrix*>> refs;
  refs.push_back({"h_global", &params.h_global});
  for (size_t l = 0; l < params.stack.layers.size(); ++l) {
    const std::string tag = "layer" + std::to_string(l);
    refs.push_back({tag + ".w_ent", &params.stack.layers[l].w_ent});
    refs.push_back({tag + ".w_rel", &params.stack.layers[l].w_rel});
    refs.push_back({tag + ".delta", &params.stack.layers[l].delta});
  }
  refs.push_back({"jump.w_ent", &params.jump.w_ent});
  refs.push_back({"jump.w_rel", &params.jump.w_rel});
  if (params.decoder.has_core()) refs.push_back({"decoder.core", &params.decoder.core});
  return refs;
}

std::vector<std::pair<std::string, const Matrix*>> param_refs(const ModelParams& params) {
  auto refs = param_refs(const_cast<ModelParams&>(params));
  std::vector<std::pair<std::string, const Matrix*>> out;
  out.reserve(refs.size());
  for (auto& [name, mat] : refs) out.push_back({name, mat});
  return out;
}

}  // namespace tkg
