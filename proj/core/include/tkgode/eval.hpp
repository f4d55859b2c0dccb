#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "tkgode/training.hpp"

namespace tkg {

enum class FilterSetting { Raw, TimeUnaware, TimeAware };

FilterSetting filter_from_name(const std::string& name);
std::string filter_name(FilterSetting setting);

struct RankRecord {
  int s = 0;
  int r = 0;
  int o = 0;
  int t = 0;
  double rank = 0.0;  // mean-of-tied-block, so halves are possible
  FilterSetting setting = FilterSetting::Raw;
};

struct MetricsReport {
  double mrr = 0.0;
  double hits1 = 0.0;
  double hits3 = 0.0;
  double hits10 = 0.0;
  long n_queries = 0;
  std::string setting;
  std::string subset;
};

/// Rank of the true object among the unmasked candidates: one plus the number
/// of strictly better scores plus half the ties (mean-of-tied-block).
double rank_query(std::span<const double> scores, int true_o,
                  const std::unordered_set<int>& mask);

/// Shared lookup structure for the three filter protocols.
class FilterIndex {
 public:
  explicit FilterIndex(const QuadrupleStore& store);

  /// Entities to exclude when ranking (s, r, ?) at timestamp t. The true
  /// object is never in the mask.
  std::unordered_set<int> mask(int s, int r, int true_o, int t, FilterSetting setting) const;

 private:
  std::unordered_map<uint64_t, std::vector<int>> all_time_;   // (s, r) -> objects
  std::unordered_map<uint64_t, std::vector<int>> per_time_;   // (s, r, t) -> objects
};

struct EvalSubset {
  enum class Kind { Full, Inductive, Horizon };
  Kind kind = Kind::Full;
  int delta_t = 1;  // horizon only

  static EvalSubset full() { return {}; }
  static EvalSubset inductive() { return {Kind::Inductive, 1}; }
  static EvalSubset horizon(int delta_t) { return {Kind::Horizon, delta_t}; }

  std::string label() const;
};

MetricsReport metrics_from_ranks(const std::vector<RankRecord>& records);

/// Ranks every test query (both directions are present through reciprocal
/// augmentation) under the chosen filter setting and aggregates MRR and
/// Hits@k. Horizon subsets infer each hidden state from history ending
/// delta_t steps before the query timestamp.
MetricsReport evaluate(const TkgData& data, const ModelParams& params, const EncoderConfig& cfg,
                       FilterSetting setting, EvalSubset subset = EvalSubset::full(),
                       std::vector<RankRecord>* records = nullptr);

/// Trains two models that differ only in the jump coefficient (w vs 0) from
/// the same seed and evaluates both.
struct AblationResult {
  MetricsReport with_jump;
  MetricsReport without_jump;
};
AblationResult ablation_run(const TkgData& data, const TrainConfig& cfg, FilterSetting setting);

void write_metrics_csv(const std::string& path, const std::vector<MetricsReport>& reports);
void write_ranks_jsonl(const std::string& path, const std::vector<RankRecord>& records);

}  // namespace tkg
