#pragma once

#include <string>

#include "tkgode/training.hpp"

namespace tkg {

/// Flat key = value run configuration. Unknown keys are rejected so a typo
/// cannot silently fall back to a default; every run archives its resolved
/// copy next to the outputs.
struct RunConfig {
  std::string dataset_dir;
  std::string out_dir = "out";

  int dim = 32;
  int layers = 2;
  int history_length = 4;
  std::string decoder = "distmult";
  std::string activation = "tanh";
  double jump_w = 0.1;
  double delta_init = 0.1;
  double learning_rate = 1e-3;
  int epochs = 30;
  int batch_size = 256;
  int steps_per_interval = 1;
  int chebyshev_nodes = 3;
  std::string backward = "interpolated_adjoint";
  uint64_t seed = 42;

  TrainConfig train_config() const;
};

RunConfig parse_run_config(const std::string& path);
RunConfig parse_run_config_text(const std::string& text, const std::string& origin = "<memory>");

/// Serialized form with sorted keys; parsing it back yields the same config.
std::string resolved_config_text(const RunConfig& cfg);
void write_resolved_config(const RunConfig& cfg, const std::string& path);

}  // namespace tkg
