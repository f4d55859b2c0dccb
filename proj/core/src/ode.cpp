#include "tkgode/ode.hpp"

#include <cmath>

namespace tkg {

Matrix OdeField::eval(const Matrix& z, double tau) const {
  Tape tape;
  std::vector<Var> params = bind_field_params(tape, *this);
  Var out = record(tape, tape.leaf(z), tau, params);
  return tape.value(out);
}

std::vector<Var> bind_field_params(Tape& tape, const OdeField& field) {
  std::vector<Var> vars;
  for (const Matrix* p : field.param_values()) vars.push_back(tape.leaf(*p));
  return vars;
}

BackwardMode backward_mode_from_name(const std::string& name) {
  if (name == "unrolled") return BackwardMode::Unrolled;
  if (name == "interpolated_adjoint") return BackwardMode::InterpolatedAdjoint;
  throw ConfigError("unknown backward mode: " + name);
}

std::string backward_mode_name(BackwardMode mode) {
  return mode == BackwardMode::Unrolled ? "unrolled" : "interpolated_adjoint";
}

Matrix rk4_step(const std::function<Matrix(const Matrix&, double)>& f, const Matrix& z, double t,
                double h) {
  Matrix k1 = f(z, t);
  Matrix z2 = z;
  axpy(h / 2.0, k1, z2);
  Matrix k2 = f(z2, t + h / 2.0);
  Matrix z3 = z;
  axpy(h / 2.0, k2, z3);
  Matrix k3 = f(z3, t + h / 2.0);
  Matrix z4 = z;
  axpy(h, k3, z4);
  Matrix k4 = f(z4, t + h);

  Matrix out = z;
  axpy(h / 6.0, k1, out);
  axpy(h / 3.0, k2, out);
  axpy(h / 3.0, k3, out);
  axpy(h / 6.0, k4, out);
  if (!all_finite(out)) throw NumericError("rk4_step: non-finite state");
  return out;
}

std::vector<double> chebyshev_grid(double tau0, double tau1, int n) {
  if (n < 2) throw ContractError("chebyshev_grid: need at least two nodes");
  std::vector<double> nodes(n);
  const double mid = 0.5 * (tau0 + tau1);
  const double half = 0.5 * (tau1 - tau0);
  for (int k = 0; k < n; ++k) {
    const double x = std::cos(M_PI * (2.0 * k + 1.0) / (2.0 * n));
    nodes[n - 1 - k] = mid + half * x;  // ascending order
  }
  return nodes;
}

Matrix barycentric_eval(std::span<const double> nodes, std::span<const Matrix> values,
                        double tau) {
  if (nodes.size() != values.size() || nodes.empty())
    throw ContractError("barycentric_eval: node/value count mismatch");
  const size_t n = nodes.size();

  for (size_t j = 0; j < n; ++j)
    if (tau == nodes[j]) return values[j];  // removable singularity, exact at nodes

  // Generic barycentric weights 1 / prod_{i != j} (x_j - x_i). The common
  // scale cancels in the second form; for Chebyshev points these reduce to
  // the classical alternating-sign weights.
  std::vector<double> w(n, 1.0);
  for (size_t j = 0; j < n; ++j)
    for (size_t i = 0; i < n; ++i)
      if (i != j) w[j] /= (nodes[j] - nodes[i]);

  Matrix numer(values[0].rows(), values[0].cols(), 0.0);
  double denom = 0.0;
  for (size_t j = 0; j < n; ++j) {
    const double term = w[j] / (tau - nodes[j]);
    axpy(term, values[j], numer);
    denom += term;
  }
  return scaled(numer, 1.0 / denom);
}

Matrix IntervalTrace::state_at(double tau) const {
  return barycentric_eval(nodes, states, tau);
}

Matrix integrate_interval(const OdeField& field, const Matrix& h0, double tau0, double tau1,
                          const SolverConfig& cfg, IntervalTrace* trace) {
  if (!(tau1 > tau0)) throw ContractError("integrate_interval: tau1 must exceed tau0");
  if (cfg.steps_per_interval < 1)
    throw ContractError("integrate_interval: steps_per_interval must be >= 1");

  auto f = [&field](const Matrix& z, double t) { return field.eval(z, t); };

  const double h = (tau1 - tau0) / cfg.steps_per_interval;
  Matrix z = h0;
  for (int s = 0; s < cfg.steps_per_interval; ++s) z = rk4_step(f, z, tau0 + s * h, h);

  if (trace != nullptr) {
    trace->tau0 = tau0;
    trace->tau1 = tau1;
    trace->nodes = chebyshev_grid(tau0, tau1, cfg.chebyshev_nodes);
    trace->states.clear();
    // Auxiliary sweep through the Chebyshev nodes at the same step density as
    // the main grid.
    Matrix zc = h0;
    double at = tau0;
    for (double node : trace->nodes) {
      const double len = node - at;
      if (len > 0.0) {
        const int steps = std::max(1, static_cast<int>(std::ceil(len / h - 1e-12)));
        const double hs = len / steps;
        for (int s = 0; s < steps; ++s) zc = rk4_step(f, zc, at + s * hs, hs);
        at = node;
      }
      trace->states.push_back(zc);
    }
  }
  return z;
}

Var integrate_interval_taped(Tape& tape, const OdeField& field, Var h0, double tau0, double tau1,
                             const SolverConfig& cfg, std::span<const Var> params) {
  if (!(tau1 > tau0)) throw ContractError("integrate_interval_taped: tau1 must exceed tau0");
  const int steps = cfg.steps_per_interval;
  if (steps < 1) throw ContractError("integrate_interval_taped: steps_per_interval must be >= 1");

  const double h = (tau1 - tau0) / steps;
  const Var half_h = tape.leaf(Matrix(1, 1, h / 2.0));
  const Var full_h = tape.leaf(Matrix(1, 1, h));
  const Var sixth_h = tape.leaf(Matrix(1, 1, h / 6.0));
  const Var third_h = tape.leaf(Matrix(1, 1, h / 3.0));

  Var z = h0;
  for (int s = 0; s < steps; ++s) {
    const double t = tau0 + s * h;
    Var k1 = field.record(tape, z, t, params);
    Var k2 = field.record(tape, tape.add(z, tape.scale(k1, half_h)), t + h / 2.0, params);
    Var k3 = field.record(tape, tape.add(z, tape.scale(k2, half_h)), t + h / 2.0, params);
    Var k4 = field.record(tape, tape.add(z, tape.scale(k3, full_h)), t + h, params);
    Var inc = tape.add(tape.scale(tape.add(k1, k4), sixth_h),
                       tape.scale(tape.add(k2, k3), third_h));
    z = tape.add(z, inc);
  }
  return z;
}

Gradients backward_unrolled(const Tape& tape, Var loss) { return tape.backward(loss); }

AdjointResult backward_interpolated_adjoint(const OdeField& field, const IntervalTrace& trace,
                                            const Matrix& loss_grad_at_end,
                                            const SolverConfig& cfg) {
  if (trace.nodes.empty() || trace.states.empty())
    throw ContractError("backward_interpolated_adjoint: missing saved Chebyshev states");

  const std::vector<const Matrix*> param_values = field.param_values();
  const size_t np = param_values.size();

  // Vector-Jacobian products of the field at the interpolated state.
  struct Vjp {
    Matrix dz;
    std::vector<Matrix> dparams;
  };
  auto vjp = [&](double tau, const Matrix& cotangent) {
    Tape tape;
    std::vector<Var> params = bind_field_params(tape, field);
    Var z = tape.leaf(trace.state_at(tau));
    Var out = field.record(tape, z, tau, params);
    Gradients grads = tape.backward(out, cotangent);
    Vjp r;
    r.dz = grads.at(z);
    r.dparams.reserve(np);
    for (const Var& p : params) r.dparams.push_back(grads.at(p));
    return r;
  };

  // Augmented reverse state: the adjoint a(tau) = dL/dz(tau) and the running
  // parameter-gradient integral. d a / d tau = -a dF/dz, d g / d tau =
  // -a dF/dtheta; integrating from tau1 down to tau0 yields g(tau0) =
  // integral of a dF/dtheta over [tau0, tau1].
  struct State {
    Matrix a;
    std::vector<Matrix> g;
  };
  auto deriv = [&](const State& s, double tau) {
    Vjp r = vjp(tau, s.a);
    State d;
    d.a = scaled(r.dz, -1.0);
    d.g.reserve(np);
    for (size_t i = 0; i < np; ++i) d.g.push_back(scaled(r.dparams[i], -1.0));
    return d;
  };
  auto add_scaled = [&](State& acc, const State& d, double c) {
    axpy(c, d.a, acc.a);
    for (size_t i = 0; i < np; ++i) axpy(c, d.g[i], acc.g[i]);
  };

  State s;
  s.a = loss_grad_at_end;
  for (size_t i = 0; i < np; ++i)
    s.g.push_back(Matrix::zeros(param_values[i]->rows(), param_values[i]->cols()));

  const int steps = std::max(1, cfg.steps_per_interval);
  const double h = (trace.tau0 - trace.tau1) / steps;  // negative
  for (int step = 0; step < steps; ++step) {
    const double t = trace.tau1 + step * h;
    State k1 = deriv(s, t);
    State mid1 = s;
    add_scaled(mid1, k1, h / 2.0);
    State k2 = deriv(mid1, t + h / 2.0);
    State mid2 = s;
    add_scaled(mid2, k2, h / 2.0);
    State k3 = deriv(mid2, t + h / 2.0);
    State end = s;
    add_scaled(end, k3, h);
    State k4 = deriv(end, t + h);

    add_scaled(s, k1, h / 6.0);
    add_scaled(s, k2, h / 3.0);
    add_scaled(s, k3, h / 3.0);
    add_scaled(s, k4, h / 6.0);
  }
  if (!all_finite(s.a)) throw NumericError("backward_interpolated_adjoint: non-finite adjoint");
  return {std::move(s.a), std::move(s.g)};
}

DerivativeNet::DerivativeNet(const AggStack& stack, const JumpParams& jump, int num_entities,
                             int num_relation_rows)
    : stack_(&stack),
      jump_(&jump),
      num_entities_(num_entities),
      num_relation_rows_(num_relation_rows) {}

std::vector<const Matrix*> DerivativeNet::param_values() const {
  std::vector<const Matrix*> out;
  for (const auto& layer : stack_->layers) {
    out.push_back(&layer.w_ent);
    out.push_back(&layer.w_rel);
    out.push_back(&layer.delta);
  }
  out.push_back(&jump_->w_ent);
  out.push_back(&jump_->w_rel);
  return out;
}

Var DerivativeNet::record(Tape& tape, Var z, double /*tau*/,
                          std::span<const Var> params) const {
  if (!bound())
    throw ContractError("DerivativeNet: snapshot and jump tensor must be bound before eval");
  const size_t expected = 3 * stack_->layers.size() + 2;
  if (params.size() != expected) throw ContractError("DerivativeNet: wrong parameter count");

  std::vector<AggLayerVars> layer_vars;
  layer_vars.reserve(stack_->layers.size());
  for (size_t i = 0; i < stack_->layers.size(); ++i)
    layer_vars.push_back({params[3 * i], params[3 * i + 1], params[3 * i + 2]});
  const JumpVars jump_vars{params[expected - 2], params[expected - 1]};

  Var h_agg = stack_forward(tape, z, *snapshot_, layer_vars, num_entities_, num_relation_rows_,
                            stack_->activation);
  Var h_out = apply_jump(tape, h_agg, z, *jump_tensor_, jump_vars, jump_->w, num_entities_,
                         num_relation_rows_, stack_->activation);
  return tape.sub(h_out, z);
}

}  // namespace tkg
