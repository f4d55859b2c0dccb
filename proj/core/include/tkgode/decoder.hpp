#pragma once

#include <span>
#include <string>
#include <vector>

#include "tkgode/autodiff.hpp"

namespace tkg {

enum class DecoderKind { DistMult, Tucker };

DecoderKind decoder_from_name(const std::string& name);
std::string decoder_name(DecoderKind kind);

/// Decoder parameters. DistMult has none. TuckER carries the d_e x d_r x d_e
/// core tensor, stored as its (d_e * d_r) x d_e unfolding with
/// core(i * d_r + j, k) = W[i][j][k]; entity and relation widths are shared.
struct DecoderParams {
  DecoderKind kind = DecoderKind::DistMult;
  Matrix core;

  double core_at(int i, int j, int k, int dim) const { return core(i * dim + j, k); }
  bool has_core() const { return kind == DecoderKind::Tucker; }
};

double distmult_score(std::span<const double> h_s, std::span<const double> h_r,
                      std::span<const double> h_o);

double tucker_score(std::span<const double> h_s, std::span<const double> h_r,
                    std::span<const double> h_o, const Matrix& core);

double score_triplet(const Matrix& h, int s, int r, int o, const DecoderParams& decoder,
                     int num_entities);

/// Scores of (s, r, v) for every entity v, as one matrix product against the
/// entity block of the hidden state.
std::vector<double> score_all_objects(const Matrix& h, int s, int r, const DecoderParams& decoder,
                                      int num_entities);

/// Batched scorer: row q holds the all-objects scores of query q.
Matrix score_queries(const Matrix& h, std::span<const int> s_ids, std::span<const int> r_ids,
                     const DecoderParams& decoder, int num_entities);

struct DecoderVars {
  Var core;
  bool has_core = false;
};

DecoderVars bind_decoder(Tape& tape, const DecoderParams& decoder);

Var score_queries_taped(Tape& tape, Var h, std::span<const int> s_ids,
                        std::span<const int> r_ids, const DecoderVars& decoder, int num_entities);

}  // namespace tkg
