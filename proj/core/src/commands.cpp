#include "tkgode/commands.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "tkgode/config.hpp"
#include "tkgode/eval.hpp"

namespace tkg {

namespace fs = std::filesystem;

namespace {

std::string resolve_out_dir(const RunConfig& cfg) {
  const char* env = std::getenv("TKGODE_OUT_DIR");
  return (env != nullptr && *env != '\0') ? std::string(env) : cfg.out_dir;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec && !fs::is_directory(dir)) throw IoError("cannot create output directory: " + dir);
}

}  // namespace

int cmd_train(const std::string& config_path) {
  try {
    RunConfig run = parse_run_config(config_path);
    if (run.dataset_dir.empty()) throw ConfigError("config: dataset_dir is required for train");
    run.out_dir = resolve_out_dir(run);
    const TrainConfig cfg = run.train_config();

    TkgData data = prepare_data(load_dataset(run.dataset_dir));
    ensure_dir(run.out_dir);

    Rng rng(cfg.seed);
    ModelParams params =
        ModelParams::init(data.store.num_entities, data.store.num_relations, cfg.dim, cfg.layers,
                          cfg.decoder, cfg.jump_w, cfg.delta_init, rng);
    AdamState state = AdamState::like(params);

    std::ofstream loss_csv(fs::path(run.out_dir) / "loss.csv", std::ios::trunc);
    if (!loss_csv) throw IoError("cannot write loss.csv under " + run.out_dir);
    loss_csv << "epoch,loss\n";
    char line[64];
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      const double loss = train_epoch(data, params, state, cfg);
      std::snprintf(line, sizeof(line), "%d,%.17g\n", epoch, loss);
      loss_csv << line;
      loss_csv.flush();
    }

    save_checkpoint((fs::path(run.out_dir) / "checkpoint.bin").string(), params, cfg);
    write_resolved_config(run, (fs::path(run.out_dir) / "resolved_config.txt").string());
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "train: " << e.what() << "\n";
    return kExitUsage;
  }
}

int cmd_eval(const std::string& checkpoint_path, const std::string& config_path,
             const std::string& setting, const std::string& subset, int horizon_delta_t) {
  try {
    RunConfig run = parse_run_config(config_path);
    if (run.dataset_dir.empty()) throw ConfigError("config: dataset_dir is required for eval");
    run.out_dir = resolve_out_dir(run);

    TkgData data = prepare_data(load_dataset(run.dataset_dir));

    TrainConfig ckpt_cfg;
    ModelParams params = load_checkpoint(checkpoint_path, &ckpt_cfg);
    if (params.num_entities != data.store.num_entities ||
        params.num_relations != data.store.num_relations) {
      throw ConfigError("checkpoint incompatible with dataset: expected " +
                        std::to_string(data.store.num_entities) + " entities / " +
                        std::to_string(data.store.num_relations) + " relations, found " +
                        std::to_string(params.num_entities) + " / " +
                        std::to_string(params.num_relations));
    }

    EvalSubset eval_subset = EvalSubset::full();
    if (horizon_delta_t > 0) {
      eval_subset = EvalSubset::horizon(horizon_delta_t);
    } else if (subset == "inductive") {
      eval_subset = EvalSubset::inductive();
    } else if (subset != "full") {
      throw ConfigError("unknown subset: " + subset);
    }

    EncoderConfig enc{ckpt_cfg.history_length, ckpt_cfg.solver};
    std::vector<RankRecord> records;
    const MetricsReport report =
        evaluate(data, params, enc, filter_from_name(setting), eval_subset, &records);

    ensure_dir(run.out_dir);
    write_metrics_csv((fs::path(run.out_dir) / "metrics.csv").string(), {report});
    write_ranks_jsonl((fs::path(run.out_dir) / "ranks.jsonl").string(), records);
    write_resolved_config(run, (fs::path(run.out_dir) / "resolved_config.txt").string());
    std::printf("%s %s MRR=%.6f hits1=%.6f hits3=%.6f hits10=%.6f n=%ld\n",
                report.setting.c_str(), report.subset.c_str(), report.mrr, report.hits1,
                report.hits3, report.hits10, report.n_queries);
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "eval: " << e.what() << "\n";
    return kExitUsage;
  }
}

int cmd_synth(const SynthArgs& args) {
  try {
    if (args.out_dir.empty()) throw ConfigError("synth: output directory is required");
    PatternSpec spec;
    spec.kind = pattern_from_name(args.pattern);
    QuadrupleStore store = generate_synthetic_tkg(args.entities, args.relations, args.timestamps,
                                                  spec, args.seed);
    write_dataset(store, args.out_dir);
    std::printf("wrote %zu events (%d entities, %d relations, %d timestamps) to %s\n",
                store.events.size(), store.num_entities, store.num_relations,
                store.num_timestamps, args.out_dir.c_str());
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "synth: " << e.what() << "\n";
    return kExitUsage;
  }
}

namespace {

// Flattens a parameter group, runs central differences of the full model loss
// against the group's autodiff gradient, and reports the worst coordinate.
// The step is 1e-3: the loss is O(1) while the time normalization makes some
// field gradients O(1e-9), so a smaller step drowns them in f64 roundoff.
double group_max_rel_error(const TkgData& data, ModelParams& params, const TrainConfig& cfg,
                           int target_t, std::span<const Query> queries, Matrix& group,
                           const Matrix& auto_grad) {
  std::vector<double> x(group.data(), group.data() + group.size());
  std::vector<double> g(auto_grad.data(), auto_grad.data() + auto_grad.size());
  auto f = [&](std::span<const double> v) {
    std::copy(v.begin(), v.end(), group.data());
    const Matrix h = infer_representation(data, params, cfg.encoder_config(), target_t);
    return loss_value(h, queries, params.decoder, params.num_entities);
  };
  const double err = grad_check(f, x, g, 1e-3);
  std::copy(x.begin(), x.end(), group.data());  // restore
  return err;
}

}  // namespace

int cmd_gradcheck(const std::string& config_path, bool corrupt_hook) {
  RunConfig run;
  TrainConfig cfg;
  try {
    run = parse_run_config(config_path);
    cfg = run.train_config();
    if (cfg.dim > 16) throw ConfigError("gradcheck requires dim <= 16");
  } catch (const std::exception& e) {
    std::cerr << "gradcheck: " << e.what() << "\n";
    return kExitUsage;
  }

  constexpr int kEntities = 5;
  constexpr int kRelations = 2;
  constexpr int kTimestamps = 6;
  constexpr double kThreshold = 1e-4;

  try {
    PatternSpec spec;
    spec.kind = Pattern::Random;
    TkgData data = prepare_data(
        generate_synthetic_tkg(kEntities, kRelations, kTimestamps, spec, cfg.seed));

    Rng rng(cfg.seed);
    ModelParams params = ModelParams::init(kEntities, kRelations, cfg.dim, cfg.layers,
                                           cfg.decoder, cfg.jump_w, cfg.delta_init, rng);

    // Exact discrete gradients: the check is meaningful only for the
    // unrolled path.
    TrainConfig check_cfg = cfg;
    check_cfg.solver.backward_mode = BackwardMode::Unrolled;
    const int target_t = check_cfg.history_length + 1;
    if (target_t >= data.store.num_timestamps)
      throw ConfigError("gradcheck: history_length too large for the fixture store");
    const std::vector<Query> queries = queries_at(data, target_t);

    std::vector<Matrix> grads =
        model_gradients(data, params, check_cfg, target_t, queries, nullptr);
    if (corrupt_hook && !grads.empty() && grads[0].size() > 0) grads[0].data()[0] += 1e-2;

    auto refs = param_refs(params);
    double worst = 0.0;
    std::printf("gradcheck: %d entities, %d relations, dim=%d, k=%d, decoder=%s\n", kEntities,
                kRelations, cfg.dim, check_cfg.history_length, decoder_name(cfg.decoder).c_str());
    for (size_t i = 0; i < refs.size(); ++i) {
      const double err = group_max_rel_error(data, params, check_cfg, target_t, queries,
                                             *refs[i].second, grads[i]);
      worst = std::max(worst, err);
      std::printf("  %-16s max_rel_error=%.3e\n", refs[i].first.c_str(), err);
    }
    std::printf("gradcheck: worst=%.3e threshold=%.0e -> %s\n", worst, kThreshold,
                worst < kThreshold ? "ok" : "FAIL");
    return worst < kThreshold ? kExitOk : kExitCheckFailed;
  } catch (const std::exception& e) {
    std::cerr << "gradcheck: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace tkg
