#pragma once

#include <functional>
#include <span>
#include <vector>

#include "tkgode/aggregator.hpp"
#include "tkgode/autodiff.hpp"
#include "tkgode/jump.hpp"

namespace tkg {

/// A differentiable time-dependent vector field over matrix states. The field
/// exposes its trainable parameters so both backward passes can reach them.
class OdeField {
 public:
  virtual ~OdeField() = default;

  /// Current parameter group values. Order is fixed across calls.
  virtual std::vector<const Matrix*> param_values() const = 0;

  /// Records the derivative at (z, tau). `params` holds leaf Vars matching
  /// param_values() order, already placed on `tape` by the caller.
  virtual Var record(Tape& tape, Var z, double tau, std::span<const Var> params) const = 0;

  /// Plain numeric evaluation through a scratch tape.
  Matrix eval(const Matrix& z, double tau) const;
};

std::vector<Var> bind_field_params(Tape& tape, const OdeField& field);

enum class BackwardMode { Unrolled, InterpolatedAdjoint };

BackwardMode backward_mode_from_name(const std::string& name);
std::string backward_mode_name(BackwardMode mode);

struct SolverConfig {
  int steps_per_interval = 1;
  int chebyshev_nodes = 3;
  BackwardMode backward_mode = BackwardMode::InterpolatedAdjoint;
};

/// Classical fourth-order Runge-Kutta update z + (h/6)(k1 + 2k2 + 2k3 + k4).
Matrix rk4_step(const std::function<Matrix(const Matrix&, double)>& f, const Matrix& z, double t,
                double h);

/// Chebyshev points cos(pi (2k+1) / (2n)), affinely mapped onto [tau0, tau1],
/// ascending.
std::vector<double> chebyshev_grid(double tau0, double tau1, int n);

/// Second-form barycentric Lagrange interpolation. Exact at the nodes
/// (returns the stored value bitwise).
Matrix barycentric_eval(std::span<const double> nodes, std::span<const Matrix> values, double tau);

/// States saved during a forward interval for the interpolated backward pass.
struct IntervalTrace {
  double tau0 = 0.0;
  double tau1 = 0.0;
  std::vector<double> nodes;
  std::vector<Matrix> states;

  Matrix state_at(double tau) const;
};

/// RK4 over steps_per_interval uniform sub-steps. When `trace` is given, the
/// states at the Chebyshev nodes of [tau0, tau1] are additionally computed by
/// an auxiliary sweep at matching step density and stored for the adjoint.
Matrix integrate_interval(const OdeField& field, const Matrix& h0, double tau0, double tau1,
                          const SolverConfig& cfg, IntervalTrace* trace = nullptr);

/// Same integration recorded on a tape (discretize-then-optimize path).
Var integrate_interval_taped(Tape& tape, const OdeField& field, Var h0, double tau0, double tau1,
                             const SolverConfig& cfg, std::span<const Var> params);

/// Exact gradients of the recorded discrete computation; reference backward.
Gradients backward_unrolled(const Tape& tape, Var loss);

struct AdjointResult {
  Matrix state_grad;                // dL/dH(tau0)
  std::vector<Matrix> param_grads;  // per field parameter group
};

/// Integrates the adjoint equations backward over [tau1, tau0] with RK4,
/// reading the state from the barycentric interpolant of the saved Chebyshev
/// states instead of solving the state ODE in reverse. Accumulates the
/// parameter gradient integral along the way.
AdjointResult backward_interpolated_adjoint(const OdeField& field, const IntervalTrace& trace,
                                            const Matrix& loss_grad_at_end,
                                            const SolverConfig& cfg);

/// The derivative network: stacked residual relational aggregation layers
/// plus the weighted stochastic jump shift, evaluated against the currently
/// bound snapshot and jump tensor. The derivative it reports is the net
/// update of the residual stack, so an all-zero-gate, zero-jump model is an
/// exact identity flow.
class DerivativeNet : public OdeField {
 public:
  DerivativeNet(const AggStack& stack, const JumpParams& jump, int num_entities,
                int num_relation_rows);

  void set_graph(const Snapshot& snapshot) { snapshot_ = &snapshot; }
  void set_jump(const JumpTensor& jt) { jump_tensor_ = &jt; }
  bool bound() const { return snapshot_ != nullptr && jump_tensor_ != nullptr; }

  std::vector<const Matrix*> param_values() const override;
  Var record(Tape& tape, Var z, double tau, std::span<const Var> params) const override;

  int num_entities() const { return num_entities_; }
  int num_relation_rows() const { return num_relation_rows_; }

 private:
  const AggStack* stack_;
  const JumpParams* jump_;
  const Snapshot* snapshot_ = nullptr;
  const JumpTensor* jump_tensor_ = nullptr;
  int num_entities_;
  int num_relation_rows_;
};

}  // namespace tkg
