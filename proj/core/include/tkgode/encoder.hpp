#pragma once

#include "tkgode/data.hpp"
#include "tkgode/model.hpp"
#include "tkgode/ode.hpp"

namespace tkg {

struct EncoderConfig {
  int history_length = 4;  // k: number of observed snapshots rolled through
  SolverConfig solver;
};

/// One integration interval of an inference run: which snapshot and jump
/// tensor are bound and the normalized time span covered.
struct IntervalPlan {
  int snapshot_t = 0;
  int jump_t = -1;  // index into TkgData::jumps; -1 binds an empty tensor
  double tau0 = 0.0;
  double tau1 = 0.0;
};

/// Interval sequence for predicting at target_t from the k+1 preceding
/// snapshots (window truncated at the start of history). The final interval
/// reuses the jump tensor between t-1 and t because the difference toward
/// target_t is unobservable at prediction time.
std::vector<IntervalPlan> plan_intervals(const TkgData& data, int history_length, int target_t);

/// Long-horizon plan: standard intervals up to history_end_t, then one final
/// integration of delta_t unit lengths with the last observed snapshot bound.
std::vector<IntervalPlan> plan_long_horizon(const TkgData& data, int history_length,
                                            int history_end_t, int delta_t);

/// Rolls the global embedding through the planned intervals. Only snapshots
/// with index < target_t are consulted; a poisoned future cannot change the
/// output.
Matrix infer_representation(const TkgData& data, const ModelParams& params,
                            const EncoderConfig& cfg, int target_t);

/// Hidden state at history_end_t + delta_t using information up to
/// history_end_t only. delta_t == 1 coincides with infer_representation at
/// history_end_t + 1.
Matrix infer_long_horizon(const TkgData& data, const ModelParams& params,
                          const EncoderConfig& cfg, int history_end_t, int delta_t);

/// Forward pass that additionally saves per-interval Chebyshev states for the
/// interpolated-adjoint backward.
struct EncoderForward {
  Matrix h_out;
  std::vector<IntervalPlan> plan;
  std::vector<IntervalTrace> traces;
};

EncoderForward infer_with_traces(const TkgData& data, const ModelParams& params,
                                 const EncoderConfig& cfg, std::vector<IntervalPlan> plan);

/// Discretize-then-optimize path: records every RK4 sub-step on the tape.
/// h_global and field_params must already be leaves of `tape` (field_params
/// in DerivativeNet parameter order).
Var infer_representation_taped(Tape& tape, const TkgData& data, const ModelParams& params,
                               const EncoderConfig& cfg, int target_t, Var h_global,
                               std::span<const Var> field_params);

/// Runs a plan through a caller-provided derivative net in value mode.
Matrix run_plan(const TkgData& data, const ModelParams& params, const SolverConfig& solver,
                std::span<const IntervalPlan> plan, std::vector<IntervalTrace>* traces = nullptr);

}  // namespace tkg
