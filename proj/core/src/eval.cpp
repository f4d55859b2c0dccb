#include "tkgode/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>

namespace tkg {

FilterSetting filter_from_name(const std::string& name) {
  if (name == "raw") return FilterSetting::Raw;
  if (name == "tu" || name == "time_unaware") return FilterSetting::TimeUnaware;
  if (name == "ta" || name == "time_aware") return FilterSetting::TimeAware;
  throw ConfigError("unknown filter setting: " + name);
}

std::string filter_name(FilterSetting setting) {
  switch (setting) {
    case FilterSetting::Raw: return "raw";
    case FilterSetting::TimeUnaware: return "time_unaware";
    case FilterSetting::TimeAware: return "time_aware";
  }
  return "?";
}

std::string EvalSubset::label() const {
  switch (kind) {
    case Kind::Full: return "full";
    case Kind::Inductive: return "inductive";
    case Kind::Horizon: return "horizon_" + std::to_string(delta_t);
  }
  return "?";
}

double rank_query(std::span<const double> scores, int true_o,
                  const std::unordered_set<int>& mask) {
  if (true_o < 0 || true_o >= static_cast<int>(scores.size()))
    throw IndexError("rank_query: true object out of range");
  if (mask.count(true_o)) throw ContractError("rank_query: true object is masked");
  const double target = scores[true_o];
  long better = 0;
  long ties = 0;
  for (int v = 0; v < static_cast<int>(scores.size()); ++v) {
    if (v == true_o || mask.count(v)) continue;
    if (scores[v] > target)
      ++better;
    else if (scores[v] == target)
      ++ties;
  }
  return 1.0 + static_cast<double>(better) + static_cast<double>(ties) / 2.0;
}

namespace {

uint64_t key_sr(int s, int r) {
  return (static_cast<uint64_t>(s) << 26) | static_cast<uint64_t>(r);
}

uint64_t key_srt(int s, int r, int t) {
  return (static_cast<uint64_t>(t) << 52) | (static_cast<uint64_t>(s) << 26) |
         static_cast<uint64_t>(r);
}

}  // namespace

FilterIndex::FilterIndex(const QuadrupleStore& store) {
  for (const auto& q : store.events) {
    all_time_[key_sr(q.s, q.r)].push_back(q.o);
    per_time_[key_srt(q.s, q.r, q.t)].push_back(q.o);
  }
}

std::unordered_set<int> FilterIndex::mask(int s, int r, int true_o, int t,
                                          FilterSetting setting) const {
  std::unordered_set<int> out;
  if (setting == FilterSetting::Raw) return out;
  const auto& index = setting == FilterSetting::TimeAware ? per_time_ : all_time_;
  const uint64_t key = setting == FilterSetting::TimeAware ? key_srt(s, r, t) : key_sr(s, r);
  auto it = index.find(key);
  if (it == index.end()) return out;
  for (int o : it->second)
    if (o != true_o) out.insert(o);
  return out;
}

MetricsReport metrics_from_ranks(const std::vector<RankRecord>& records) {
  MetricsReport report;
  report.n_queries = static_cast<long>(records.size());
  if (records.empty()) return report;
  double mrr = 0.0, h1 = 0.0, h3 = 0.0, h10 = 0.0;
  for (const auto& rec : records) {
    mrr += 1.0 / rec.rank;
    h1 += rec.rank <= 1.0 ? 1.0 : 0.0;
    h3 += rec.rank <= 3.0 ? 1.0 : 0.0;
    h10 += rec.rank <= 10.0 ? 1.0 : 0.0;
  }
  report.mrr = mrr / records.size();
  report.hits1 = h1 / records.size();
  report.hits3 = h3 / records.size();
  report.hits10 = h10 / records.size();
  return report;
}

MetricsReport evaluate(const TkgData& data, const ModelParams& params, const EncoderConfig& cfg,
                       FilterSetting setting, EvalSubset subset,
                       std::vector<RankRecord>* records_out) {
  const QuadrupleStore& store = data.store;
  std::vector<Quadruple> test_events;
  if (subset.kind == EvalSubset::Kind::Inductive) {
    test_events = inductive_subset(store);
  } else {
    for (const auto& q : store.events)
      if (store.in_test(q.t)) test_events.push_back(q);
  }

  MetricsReport report;
  report.setting = filter_name(setting);
  report.subset = subset.label();
  if (test_events.empty()) return report;  // flagged by n_queries == 0

  // Group queries by timestamp so each hidden state is computed once.
  std::map<int, std::vector<Quadruple>> by_t;
  for (const auto& q : test_events) by_t[q.t].push_back(q);

  const FilterIndex filter(store);
  std::vector<RankRecord> records;
  records.reserve(test_events.size());

  for (const auto& [t, queries] : by_t) {
    Matrix h;
    if (subset.kind == EvalSubset::Kind::Horizon) {
      const int history_end = t - subset.delta_t;
      if (history_end < 1) continue;
      h = infer_long_horizon(data, params, cfg, history_end, subset.delta_t);
    } else {
      h = infer_representation(data, params, cfg, t);
    }
    std::vector<int> s_ids, r_ids;
    s_ids.reserve(queries.size());
    r_ids.reserve(queries.size());
    for (const auto& q : queries) {
      s_ids.push_back(q.s);
      r_ids.push_back(q.r);
    }
    const Matrix scores = score_queries(h, s_ids, r_ids, params.decoder, params.num_entities);
    for (size_t i = 0; i < queries.size(); ++i) {
      const Quadruple& q = queries[i];
      const auto mask = filter.mask(q.s, q.r, q.o, q.t, setting);
      const std::span<const double> row{scores.row(static_cast<int>(i)),
                                        static_cast<size_t>(params.num_entities)};
      records.push_back({q.s, q.r, q.o, q.t, rank_query(row, q.o, mask), setting});
    }
  }

  MetricsReport out = metrics_from_ranks(records);
  out.setting = report.setting;
  out.subset = report.subset;
  if (records_out != nullptr) *records_out = std::move(records);
  return out;
}

AblationResult ablation_run(const TkgData& data, const TrainConfig& cfg, FilterSetting setting) {
  if (!(cfg.jump_w > 0.0)) throw ContractError("ablation_run: jump coefficient must be positive");

  auto train_arm = [&](double w) {
    TrainConfig arm_cfg = cfg;
    arm_cfg.jump_w = w;
    Rng rng(arm_cfg.seed);
    ModelParams params = ModelParams::init(data.store.num_entities, data.store.num_relations,
                                           arm_cfg.dim, arm_cfg.layers, arm_cfg.decoder, w,
                                           arm_cfg.delta_init, rng);
    AdamState state = AdamState::like(params);
    for (int e = 0; e < arm_cfg.epochs; ++e) train_epoch(data, params, state, arm_cfg);
    return evaluate(data, params, arm_cfg.encoder_config(), setting);
  };

  return {train_arm(cfg.jump_w), train_arm(0.0)};
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsReport>& reports) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write metrics csv: " + path);
  out << "setting,subset,MRR,hits1,hits3,hits10,n_queries\n";
  char line[256];
  for (const auto& r : reports) {
    std::snprintf(line, sizeof(line), "%s,%s,%.10g,%.10g,%.10g,%.10g,%ld\n", r.setting.c_str(),
                  r.subset.c_str(), r.mrr, r.hits1, r.hits3, r.hits10, r.n_queries);
    out << line;
  }
}

void write_ranks_jsonl(const std::string& path, const std::vector<RankRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write ranks jsonl: " + path);
  char line[256];
  for (const auto& rec : records) {
    std::snprintf(line, sizeof(line),
                  "{\"s\":%d,\"r\":%d,\"o\":%d,\"t\":%d,\"setting\":\"%s\",\"rank\":%.10g}\n",
                  rec.s, rec.r, rec.o, rec.t, filter_name(rec.setting).c_str(), rec.rank);
    out << line;
  }
}

}  // namespace tkg
