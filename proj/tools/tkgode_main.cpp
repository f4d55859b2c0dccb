// tkgode: temporal knowledge graph forecasting with a graph neural ODE.
//
// Subcommands: train, eval, synth, gradcheck. Science parameters live in a
// key = value config file; flags only select command-level modes. Exit codes:
// 0 success, 1 check failure, 2 usage/config error.

#include <CLI11.hpp>

#include "tkgode/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"temporal KG forecasting with a graph neural ODE"};
  app.require_subcommand(1);

  std::string config_path;
  auto* train = app.add_subcommand("train", "train a model and write a checkpoint");
  train->add_option("-c,--config", config_path, "run config file")->required();

  std::string eval_checkpoint, eval_setting = "ta", eval_subset = "full";
  int eval_horizon = 0;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("-c,--config", config_path, "run config file")->required();
  eval->add_option("--checkpoint", eval_checkpoint, "checkpoint file")->required();
  eval->add_option("--setting", eval_setting, "raw | tu | ta");
  eval->add_option("--subset", eval_subset, "full | inductive");
  eval->add_option("--horizon", eval_horizon, "predict delta_t steps past the history");

  tkg::SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--pattern", synth_args.pattern, "periodic | jump_consequence | random");
  synth->add_option("--entities", synth_args.entities, "entity count");
  synth->add_option("--relations", synth_args.relations, "relation count");
  synth->add_option("--timestamps", synth_args.timestamps, "timestamp count");
  synth->add_option("--seed", synth_args.seed, "generator seed");
  synth->add_option("out_dir", synth_args.out_dir, "output directory")->required();

  bool corrupt = false;
  auto* gradcheck =
      app.add_subcommand("gradcheck", "compare exact gradients against finite differences");
  gradcheck->add_option("-c,--config", config_path, "run config file (dim <= 16)")->required();
  gradcheck->add_flag("--corrupt", corrupt)->group("");  // negative-control test hook

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return tkg::kExitUsage;
  }

  if (train->parsed()) return tkg::cmd_train(config_path);
  if (eval->parsed())
    return tkg::cmd_eval(eval_checkpoint, config_path, eval_setting, eval_subset, eval_horizon);
  if (synth->parsed()) return tkg::cmd_synth(synth_args);
  if (gradcheck->parsed()) return tkg::cmd_gradcheck(config_path, corrupt);
  return tkg::kExitUsage;
}
