#include "tkgode/decoder.hpp"

namespace tkg {

DecoderKind decoder_from_name(const std::string& name) {
  if (name == "distmult") return DecoderKind::DistMult;
  if (name == "tucker") return DecoderKind::Tucker;
  throw ConfigError("unknown decoder: " + name);
}

std::string decoder_name(DecoderKind kind) {
  return kind == DecoderKind::DistMult ? "distmult" : "tucker";
}

double distmult_score(std::span<const double> h_s, std::span<const double> h_r,
                      std::span<const double> h_o) {
  if (h_s.size() != h_r.size() || h_s.size() != h_o.size())
    throw DimError("distmult_score: dimension mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < h_s.size(); ++i) acc += h_s[i] * h_r[i] * h_o[i];
  return acc;
}

double tucker_score(std::span<const double> h_s, std::span<const double> h_r,
                    std::span<const double> h_o, const Matrix& core) {
  const int d = static_cast<int>(h_s.size());
  if (h_r.size() != h_s.size() || h_o.size() != h_s.size() || core.rows() != d * d ||
      core.cols() != d)
    throw DimError("tucker_score: dimension mismatch");
  double acc = 0.0;
  for (int i = 0; i < d; ++i) {
    if (h_s[i] == 0.0) continue;
    for (int j = 0; j < d; ++j) {
      const double sij = h_s[i] * h_r[j];
      if (sij == 0.0) continue;
      const double* crow = core.row(i * d + j);
      for (int k = 0; k < d; ++k) acc += sij * crow[k] * h_o[k];
    }
  }
  return acc;
}

namespace {

std::span<const double> row_span(const Matrix& h, int r) {
  return {h.row(r), static_cast<size_t>(h.cols())};
}

}  // namespace

double score_triplet(const Matrix& h, int s, int r, int o, const DecoderParams& decoder,
                     int num_entities) {
  if (s < 0 || s >= num_entities || o < 0 || o >= num_entities)
    throw IndexError("score_triplet: entity id out of range");
  const int rel_row = num_entities + r;
  if (rel_row >= h.rows()) throw IndexError("score_triplet: relation id out of range");
  if (decoder.kind == DecoderKind::DistMult)
    return distmult_score(row_span(h, s), row_span(h, rel_row), row_span(h, o));
  return tucker_score(row_span(h, s), row_span(h, rel_row), row_span(h, o), decoder.core);
}

Matrix score_queries(const Matrix& h, std::span<const int> s_ids, std::span<const int> r_ids,
                     const DecoderParams& decoder, int num_entities) {
  if (s_ids.size() != r_ids.size()) throw DimError("score_queries: id list length mismatch");
  const int q = static_cast<int>(s_ids.size());
  const int d = h.cols();

  // Per-query context vector c with scores = c . h_v for every entity v.
  Matrix ctx(q, d);
  for (int i = 0; i < q; ++i) {
    const int s = s_ids[i];
    const int rel_row = num_entities + r_ids[i];
    if (s < 0 || s >= num_entities || rel_row < num_entities || rel_row >= h.rows())
      throw IndexError("score_queries: id out of range");
    const double* hs = h.row(s);
    const double* hr = h.row(rel_row);
    double* crow = ctx.row(i);
    if (decoder.kind == DecoderKind::DistMult) {
      for (int k = 0; k < d; ++k) crow[k] = hs[k] * hr[k];
    } else {
      for (int k = 0; k < d; ++k) crow[k] = 0.0;
      for (int a = 0; a < d; ++a) {
        if (hs[a] == 0.0) continue;
        for (int b = 0; b < d; ++b) {
          const double sab = hs[a] * hr[b];
          if (sab == 0.0) continue;
          const double* crow_core = decoder.core.row(a * d + b);
          for (int k = 0; k < d; ++k) crow[k] += sab * crow_core[k];
        }
      }
    }
  }

  Matrix scores(q, num_entities);
  for (int i = 0; i < q; ++i) {
    const double* crow = ctx.row(i);
    double* srow = scores.row(i);
    for (int v = 0; v < num_entities; ++v) {
      const double* hv = h.row(v);
      double acc = 0.0;
      for (int k = 0; k < d; ++k) acc += crow[k] * hv[k];
      srow[v] = acc;
    }
  }
  return scores;
}

std::vector<double> score_all_objects(const Matrix& h, int s, int r, const DecoderParams& decoder,
                                      int num_entities) {
  const int ids_s[1] = {s};
  const int ids_r[1] = {r};
  Matrix m = score_queries(h, ids_s, ids_r, decoder, num_entities);
  return std::vector<double>(m.row(0), m.row(0) + num_entities);
}

DecoderVars bind_decoder(Tape& tape, const DecoderParams& decoder) {
  DecoderVars vars;
  if (decoder.has_core()) {
    vars.core = tape.leaf(decoder.core);
    vars.has_core = true;
  }
  return vars;
}

Var score_queries_taped(Tape& tape, Var h, std::span<const int> s_ids,
                        std::span<const int> r_ids, const DecoderVars& decoder,
                        int num_entities) {
  if (s_ids.size() != r_ids.size())
    throw DimError("score_queries_taped: id list length mismatch");
  std::vector<int> subj(s_ids.begin(), s_ids.end());
  std::vector<int> rel(r_ids.size());
  for (size_t i = 0; i < r_ids.size(); ++i) rel[i] = num_entities + r_ids[i];

  std::vector<int> entity_rows(num_entities);
  for (int v = 0; v < num_entities; ++v) entity_rows[v] = v;
  Var entities = tape.gather_rows(h, entity_rows);

  Var hs = tape.gather_rows(h, subj);
  Var hr = tape.gather_rows(h, rel);
  Var ctx;
  if (!decoder.has_core) {
    ctx = tape.hadamard(hs, hr);
  } else {
    ctx = tape.matmul(tape.row_kron(hs, hr), decoder.core);
  }
  return tape.matmul(ctx, entities, /*trans_b=*/true);
}

}  // namespace tkg
