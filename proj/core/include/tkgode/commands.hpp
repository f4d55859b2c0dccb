#pragma once

#include <cstdint>
#include <string>

namespace tkg {

// Exit-code contract shared by every command: 0 success, 1 check failure,
// 2 usage/config/IO error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;

/// Trains per config; writes checkpoint.bin, loss.csv (one row per epoch) and
/// resolved_config.txt into the output directory.
int cmd_train(const std::string& config_path);

/// Evaluates a checkpoint; writes metrics.csv and ranks.jsonl. subset is
/// "full" or "inductive"; horizon_delta_t > 0 switches to the long-horizon
/// protocol with that offset.
int cmd_eval(const std::string& checkpoint_path, const std::string& config_path,
             const std::string& setting, const std::string& subset, int horizon_delta_t);

struct SynthArgs {
  std::string pattern = "periodic";
  int entities = 20;
  int relations = 4;
  int timestamps = 40;
  uint64_t seed = 7;
  std::string out_dir;
};

/// Writes train/valid/test TSVs split 80-10-10 by timestamp.
int cmd_synth(const SynthArgs& args);

/// Compares the exact unrolled gradients of a small model against central
/// finite differences, printing the max relative error per parameter group.
/// corrupt_hook deliberately breaks one gradient entry (negative-control test
/// hook).
int cmd_gradcheck(const std::string& config_path, bool corrupt_hook = false);

}  // namespace tkg
