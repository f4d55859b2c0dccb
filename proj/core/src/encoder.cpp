#include "tkgode/encoder.hpp"

namespace tkg {

namespace {

const JumpTensor& empty_jump() {
  static const JumpTensor kEmpty;
  return kEmpty;
}

void check_no_leakage(const std::vector<IntervalPlan>& plan, int target_t,
                      const TkgData& data) {
  for (const auto& iv : plan) {
    // Snapshot index and jump tensor (built from snapshots jump_t and
    // jump_t + 1) must stay strictly before the prediction timestamp.
    if (iv.snapshot_t >= target_t || (iv.jump_t >= 0 && iv.jump_t + 1 >= target_t))
      throw ContractError("encoder: plan would leak snapshots at or after the target");
    if (iv.snapshot_t < 0 || iv.snapshot_t >= static_cast<int>(data.snapshots.size()))
      throw IndexError("encoder: snapshot index out of range");
    if (iv.jump_t >= static_cast<int>(data.jumps.size()))
      throw IndexError("encoder: jump tensor index out of range");
  }
}

}  // namespace

std::vector<IntervalPlan> plan_intervals(const TkgData& data, int history_length, int target_t) {
  if (history_length < 1) throw ContractError("plan_intervals: history length must be >= 1");
  if (target_t < 1 || target_t >= data.store.num_timestamps + 1)
    throw ContractError("plan_intervals: target timestamp out of range");

  const int t = target_t - 1;  // last observable snapshot
  const int start = std::max(0, t - history_length);
  std::vector<IntervalPlan> plan;
  plan.reserve(t - start + 1);
  for (int cur = start; cur <= t; ++cur) {
    IntervalPlan iv;
    iv.snapshot_t = cur;
    iv.jump_t = (cur != t) ? cur : t - 1;  // the final interval reuses the last observed jump
    iv.tau0 = data.time_map.tau(cur);
    iv.tau1 = data.time_map.tau(cur + 1);
    plan.push_back(iv);
  }
  check_no_leakage(plan, target_t, data);
  return plan;
}

std::vector<IntervalPlan> plan_long_horizon(const TkgData& data, int history_length,
                                            int history_end_t, int delta_t) {
  if (delta_t < 1) throw ContractError("plan_long_horizon: delta_t must be >= 1");
  if (history_end_t < 1) throw ContractError("plan_long_horizon: no observable history");

  const int t = history_end_t;
  const int start = std::max(0, t - history_length);
  std::vector<IntervalPlan> plan;
  for (int cur = start; cur < t; ++cur) {
    IntervalPlan iv;
    iv.snapshot_t = cur;
    iv.jump_t = cur;
    iv.tau0 = data.time_map.tau(cur);
    iv.tau1 = data.time_map.tau(cur + 1);
    plan.push_back(iv);
  }
  IntervalPlan last;
  last.snapshot_t = t;
  last.jump_t = t - 1;
  last.tau0 = data.time_map.tau(t);
  // Evaluating the linear map at t + delta_t keeps delta_t == 1 bit-identical
  // to the standard plan.
  last.tau1 = data.time_map.tau(t + delta_t);
  plan.push_back(last);
  check_no_leakage(plan, t + 1, data);
  return plan;
}

Matrix run_plan(const TkgData& data, const ModelParams& params, const SolverConfig& solver,
                std::span<const IntervalPlan> plan, std::vector<IntervalTrace>* traces) {
  DerivativeNet net(params.stack, params.jump, params.num_entities, params.relation_rows());
  Matrix h = params.h_global;
  if (traces != nullptr) traces->assign(plan.size(), IntervalTrace{});
  for (size_t i = 0; i < plan.size(); ++i) {
    const IntervalPlan& iv = plan[i];
    net.set_graph(data.snapshots[iv.snapshot_t]);
    net.set_jump(iv.jump_t >= 0 ? data.jumps[iv.jump_t] : empty_jump());
    IntervalTrace* trace = traces != nullptr ? &(*traces)[i] : nullptr;
    h = integrate_interval(net, h, iv.tau0, iv.tau1, solver, trace);
  }
  return h;
}

Matrix infer_representation(const TkgData& data, const ModelParams& params,
                            const EncoderConfig& cfg, int target_t) {
  const auto plan = plan_intervals(data, cfg.history_length, target_t);
  return run_plan(data, params, cfg.solver, plan);
}

Matrix infer_long_horizon(const TkgData& data, const ModelParams& params,
                          const EncoderConfig& cfg, int history_end_t, int delta_t) {
  const auto plan = plan_long_horizon(data, cfg.history_length, history_end_t, delta_t);
  return run_plan(data, params, cfg.solver, plan);
}

EncoderForward infer_with_traces(const TkgData& data, const ModelParams& params,
                                 const EncoderConfig& cfg, std::vector<IntervalPlan> plan) {
  EncoderForward fwd;
  fwd.plan = std::move(plan);
  fwd.h_out = run_plan(data, params, cfg.solver, fwd.plan, &fwd.traces);
  return fwd;
}

Var infer_representation_taped(Tape& tape, const TkgData& data, const ModelParams& params,
                               const EncoderConfig& cfg, int target_t, Var h_global,
                               std::span<const Var> field_params) {
  const auto plan = plan_intervals(data, cfg.history_length, target_t);
  DerivativeNet net(params.stack, params.jump, params.num_entities, params.relation_rows());
  Var h = h_global;
  for (const auto& iv : plan) {
    net.set_graph(data.snapshots[iv.snapshot_t]);
    net.set_jump(iv.jump_t >= 0 ? data.jumps[iv.jump_t] : empty_jump());
    h = integrate_interval_taped(tape, net, h, iv.tau0, iv.tau1, cfg.solver, field_params);
  }
  return h;
}

}  // namespace tkg
