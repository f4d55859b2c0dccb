#include "tkgode/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tkg {

const Matrix& Gradients::at(Var v) {
  if (v.id < 0 || v.id >= static_cast<int>(grads_.size()))
    throw IndexError("Gradients::at: unknown node");
  Matrix& g = grads_[v.id];
  if (g.empty() && (shapes_[v.id].first != 0 || shapes_[v.id].second != 0))
    g = Matrix::zeros(shapes_[v.id].first, shapes_[v.id].second);
  return g;
}

bool Gradients::reached(Var v) const {
  return v.id >= 0 && v.id < static_cast<int>(grads_.size()) && !grads_[v.id].empty();
}

void Tape::check_var(Var v, const char* who) const {
  if (v.id < 0 || v.id >= static_cast<int>(nodes_.size()))
    throw IndexError(std::string(who) + ": var not on this tape");
}

Var Tape::push(Node n) {
  const int id = static_cast<int>(nodes_.size());
  const int r = n.value.rows();
  const int c = n.value.cols();
  nodes_.push_back(std::move(n));
  return Var{id, r, c};
}

Var Tape::leaf(Matrix value) {
  Node n;
  n.kind = OpKind::Leaf;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::matmul(Var a, Var b, bool trans_b) {
  check_var(a, "matmul");
  check_var(b, "matmul");
  Node n;
  n.kind = OpKind::MatMul;
  n.a = a.id;
  n.b = b.id;
  n.trans_b = trans_b;
  n.value = tkg::matmul(nodes_[a.id].value, nodes_[b.id].value, trans_b);
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  check_var(a, "add");
  check_var(b, "add");
  Node n;
  n.kind = OpKind::Add;
  n.a = a.id;
  n.b = b.id;
  n.value = nodes_[a.id].value + nodes_[b.id].value;
  return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
  check_var(a, "sub");
  check_var(b, "sub");
  Node n;
  n.kind = OpKind::Sub;
  n.a = a.id;
  n.b = b.id;
  n.value = nodes_[a.id].value - nodes_[b.id].value;
  return push(std::move(n));
}

Var Tape::scale(Var x, Var s) {
  check_var(x, "scale");
  check_var(s, "scale");
  const Matrix& sv = nodes_[s.id].value;
  if (sv.rows() != 1 || sv.cols() != 1) throw DimError("scale: scalar input must be 1x1");
  Node n;
  n.kind = OpKind::Scale;
  n.a = x.id;
  n.b = s.id;
  n.value = scaled(nodes_[x.id].value, sv(0, 0));
  return push(std::move(n));
}

Var Tape::hadamard(Var a, Var b) {
  check_var(a, "hadamard");
  check_var(b, "hadamard");
  const Matrix& av = nodes_[a.id].value;
  const Matrix& bv = nodes_[b.id].value;
  Node n;
  n.kind = OpKind::Hadamard;
  n.a = a.id;
  n.b = b.id;
  if (av.same_shape(bv)) {
    Matrix out = av;
    for (size_t i = 0; i < out.size(); ++i) out.data()[i] *= bv.data()[i];
    n.value = std::move(out);
  } else if (bv.rows() == 1 && bv.cols() == av.cols()) {
    Matrix out = av;
    for (int i = 0; i < av.rows(); ++i)
      for (int j = 0; j < av.cols(); ++j) out(i, j) *= bv(0, j);
    n.value = std::move(out);
  } else {
    throw DimError("hadamard: shape mismatch");
  }
  return push(std::move(n));
}

Var Tape::tanh(Var x) {
  check_var(x, "tanh");
  Node n;
  n.kind = OpKind::Tanh;
  n.a = x.id;
  Matrix out = nodes_[x.id].value;
  for (size_t i = 0; i < out.size(); ++i) out.data()[i] = std::tanh(out.data()[i]);
  n.value = std::move(out);
  return push(std::move(n));
}

Var Tape::sigmoid(Var x) {
  check_var(x, "sigmoid");
  Node n;
  n.kind = OpKind::Sigmoid;
  n.a = x.id;
  Matrix out = nodes_[x.id].value;
  for (size_t i = 0; i < out.size(); ++i) out.data()[i] = 1.0 / (1.0 + std::exp(-out.data()[i]));
  n.value = std::move(out);
  return push(std::move(n));
}

Var Tape::gather_rows(Var x, std::vector<int> rows) {
  check_var(x, "gather_rows");
  const Matrix& xv = nodes_[x.id].value;
  Matrix out(static_cast<int>(rows.size()), xv.cols());
  for (size_t i = 0; i < rows.size(); ++i) {
    const int r = rows[i];
    if (r < 0 || r >= xv.rows()) throw IndexError("gather_rows: row index out of range");
    std::copy(xv.row(r), xv.row(r) + xv.cols(), out.row(static_cast<int>(i)));
  }
  Node n;
  n.kind = OpKind::GatherRows;
  n.a = x.id;
  n.idx = std::move(rows);
  n.value = std::move(out);
  return push(std::move(n));
}

Var Tape::scatter_mean_rows(Var x, std::vector<int> groups, int num_groups) {
  check_var(x, "scatter_mean_rows");
  const Matrix& xv = nodes_[x.id].value;
  if (static_cast<int>(groups.size()) != xv.rows())
    throw DimError("scatter_mean_rows: one group id per input row required");
  Matrix out(num_groups, xv.cols(), 0.0);
  std::vector<int> counts(num_groups, 0);
  for (size_t i = 0; i < groups.size(); ++i) {
    const int g = groups[i];
    if (g < 0 || g >= num_groups) throw IndexError("scatter_mean_rows: group id out of range");
    counts[g] += 1;
    const double* src = xv.row(static_cast<int>(i));
    double* dst = out.row(g);
    for (int j = 0; j < xv.cols(); ++j) dst[j] += src[j];
  }
  for (int g = 0; g < num_groups; ++g) {
    if (counts[g] > 1) {
      double* dst = out.row(g);
      const double inv = 1.0 / counts[g];
      for (int j = 0; j < xv.cols(); ++j) dst[j] *= inv;
    }
  }
  Node n;
  n.kind = OpKind::ScatterMeanRows;
  n.a = x.id;
  n.idx = std::move(groups);
  n.groups = num_groups;
  n.value = std::move(out);
  return push(std::move(n));
}

Var Tape::row_kron(Var a, Var b) {
  check_var(a, "row_kron");
  check_var(b, "row_kron");
  const Matrix& av = nodes_[a.id].value;
  const Matrix& bv = nodes_[b.id].value;
  if (av.rows() != bv.rows()) throw DimError("row_kron: row counts disagree");
  Matrix out(av.rows(), av.cols() * bv.cols());
  for (int i = 0; i < av.rows(); ++i) {
    double* orow = out.row(i);
    for (int p = 0; p < av.cols(); ++p) {
      const double apv = av(i, p);
      for (int q = 0; q < bv.cols(); ++q) orow[p * bv.cols() + q] = apv * bv(i, q);
    }
  }
  Node n;
  n.kind = OpKind::RowKron;
  n.a = a.id;
  n.b = b.id;
  n.value = std::move(out);
  return push(std::move(n));
}

Var Tape::softmax_cross_entropy(Var scores, std::vector<int> targets) {
  check_var(scores, "softmax_cross_entropy");
  const Matrix& sv = nodes_[scores.id].value;
  if (static_cast<int>(targets.size()) != sv.rows())
    throw DimError("softmax_cross_entropy: one target per row required");
  const int q = sv.rows();
  const int c = sv.cols();
  Matrix probs(q, c);
  double total = 0.0;
  for (int i = 0; i < q; ++i) {
    if (targets[i] < 0 || targets[i] >= c)
      throw IndexError("softmax_cross_entropy: target out of range");
    const double* row = sv.row(i);
    double m = row[0];
    for (int j = 1; j < c; ++j) m = std::max(m, row[j]);
    double z = 0.0;
    for (int j = 0; j < c; ++j) z += std::exp(row[j] - m);
    const double log_z = m + std::log(z);
    double* prow = probs.row(i);
    for (int j = 0; j < c; ++j) prow[j] = std::exp(row[j] - log_z);
    total += log_z - row[targets[i]];
  }
  Node n;
  n.kind = OpKind::RowSoftmaxCrossEntropy;
  n.a = scores.id;
  n.idx = std::move(targets);
  n.aux = std::move(probs);
  n.value = Matrix(1, 1, total / q);
  return push(std::move(n));
}

Var Tape::sum(Var x) {
  check_var(x, "sum");
  const Matrix& xv = nodes_[x.id].value;
  double acc = 0.0;
  for (size_t i = 0; i < xv.size(); ++i) acc += xv.data()[i];
  Node n;
  n.kind = OpKind::Sum;
  n.a = x.id;
  n.value = Matrix(1, 1, acc);
  return push(std::move(n));
}

const Matrix& Tape::value(Var v) const {
  check_var(v, "value");
  return nodes_[v.id].value;
}

Gradients Tape::backward(Var loss) const {
  check_var(loss, "backward");
  const Matrix& lv = nodes_[loss.id].value;
  if (lv.rows() != 1 || lv.cols() != 1) throw ContractError("backward: loss must be 1x1");
  return backward(loss, Matrix(1, 1, 1.0));
}

Gradients Tape::backward(Var output, const Matrix& seed) const {
  check_var(output, "backward");
  if (!nodes_[output.id].value.same_shape(seed))
    throw DimError("backward: seed shape must match output");

  Gradients result;
  result.grads_.resize(nodes_.size());
  result.shapes_.resize(nodes_.size());
  for (size_t i = 0; i < nodes_.size(); ++i)
    result.shapes_[i] = {nodes_[i].value.rows(), nodes_[i].value.cols()};

  auto& g = result.grads_;
  auto accum = [&](int id, const Matrix& delta) {
    if (g[id].empty())
      g[id] = delta;
    else
      for (size_t i = 0; i < delta.size(); ++i) g[id].data()[i] += delta.data()[i];
  };

  g[output.id] = seed;

  for (int id = output.id; id >= 0; --id) {
    if (g[id].empty()) continue;
    const Node& n = nodes_[id];
    const Matrix& up = g[id];
    switch (n.kind) {
      case OpKind::Leaf:
        break;
      case OpKind::MatMul: {
        const Matrix& av = nodes_[n.a].value;
        const Matrix& bv = nodes_[n.b].value;
        if (!n.trans_b) {
          accum(n.a, tkg::matmul(up, bv, /*trans_b=*/true));
          // dB = A^T @ up, computed as (up^T @ A)^T without a transpose op
          Matrix db(bv.rows(), bv.cols(), 0.0);
          for (int i = 0; i < av.rows(); ++i)
            for (int p = 0; p < av.cols(); ++p) {
              const double avip = av(i, p);
              if (avip == 0.0) continue;
              for (int j = 0; j < up.cols(); ++j) db(p, j) += avip * up(i, j);
            }
          accum(n.b, db);
        } else {
          accum(n.a, tkg::matmul(up, bv, /*trans_b=*/false));
          // out = A @ B^T, so dB = up^T @ A
          Matrix db(bv.rows(), bv.cols(), 0.0);
          for (int i = 0; i < av.rows(); ++i)
            for (int j = 0; j < up.cols(); ++j) {
              const double u = up(i, j);
              if (u == 0.0) continue;
              for (int p = 0; p < av.cols(); ++p) db(j, p) += u * av(i, p);
            }
          accum(n.b, db);
        }
        break;
      }
      case OpKind::Add:
        accum(n.a, up);
        accum(n.b, up);
        break;
      case OpKind::Sub:
        accum(n.a, up);
        accum(n.b, scaled(up, -1.0));
        break;
      case OpKind::Scale: {
        const double s = nodes_[n.b].value(0, 0);
        accum(n.a, scaled(up, s));
        const Matrix& xv = nodes_[n.a].value;
        double acc = 0.0;
        for (size_t i = 0; i < xv.size(); ++i) acc += up.data()[i] * xv.data()[i];
        accum(n.b, Matrix(1, 1, acc));
        break;
      }
      case OpKind::Hadamard: {
        const Matrix& av = nodes_[n.a].value;
        const Matrix& bv = nodes_[n.b].value;
        if (av.same_shape(bv)) {
          Matrix da = up;
          for (size_t i = 0; i < da.size(); ++i) da.data()[i] *= bv.data()[i];
          accum(n.a, da);
          Matrix db = up;
          for (size_t i = 0; i < db.size(); ++i) db.data()[i] *= av.data()[i];
          accum(n.b, db);
        } else {
          Matrix da = up;
          for (int i = 0; i < da.rows(); ++i)
            for (int j = 0; j < da.cols(); ++j) da(i, j) *= bv(0, j);
          accum(n.a, da);
          Matrix db(1, bv.cols(), 0.0);
          for (int i = 0; i < av.rows(); ++i)
            for (int j = 0; j < av.cols(); ++j) db(0, j) += up(i, j) * av(i, j);
          accum(n.b, db);
        }
        break;
      }
      case OpKind::Tanh: {
        Matrix da = up;
        const Matrix& out = n.value;
        for (size_t i = 0; i < da.size(); ++i)
          da.data()[i] *= 1.0 - out.data()[i] * out.data()[i];
        accum(n.a, da);
        break;
      }
      case OpKind::Sigmoid: {
        Matrix da = up;
        const Matrix& out = n.value;
        for (size_t i = 0; i < da.size(); ++i)
          da.data()[i] *= out.data()[i] * (1.0 - out.data()[i]);
        accum(n.a, da);
        break;
      }
      case OpKind::GatherRows: {
        const Matrix& xv = nodes_[n.a].value;
        Matrix da(xv.rows(), xv.cols(), 0.0);
        for (size_t i = 0; i < n.idx.size(); ++i) {
          const double* src = up.row(static_cast<int>(i));
          double* dst = da.row(n.idx[i]);
          for (int j = 0; j < xv.cols(); ++j) dst[j] += src[j];
        }
        accum(n.a, da);
        break;
      }
      case OpKind::ScatterMeanRows: {
        const Matrix& xv = nodes_[n.a].value;
        std::vector<int> counts(n.groups, 0);
        for (int gidx : n.idx) counts[gidx] += 1;
        Matrix da(xv.rows(), xv.cols(), 0.0);
        for (size_t i = 0; i < n.idx.size(); ++i) {
          const int gr = n.idx[i];
          const double inv = 1.0 / counts[gr];
          const double* src = up.row(gr);
          double* dst = da.row(static_cast<int>(i));
          for (int j = 0; j < xv.cols(); ++j) dst[j] = src[j] * inv;
        }
        accum(n.a, da);
        break;
      }
      case OpKind::RowKron: {
        const Matrix& av = nodes_[n.a].value;
        const Matrix& bv = nodes_[n.b].value;
        Matrix da(av.rows(), av.cols(), 0.0);
        Matrix db(bv.rows(), bv.cols(), 0.0);
        for (int i = 0; i < av.rows(); ++i) {
          const double* urow = up.row(i);
          for (int p = 0; p < av.cols(); ++p)
            for (int q = 0; q < bv.cols(); ++q) {
              const double u = urow[p * bv.cols() + q];
              da(i, p) += u * bv(i, q);
              db(i, q) += u * av(i, p);
            }
        }
        accum(n.a, da);
        accum(n.b, db);
        break;
      }
      case OpKind::RowSoftmaxCrossEntropy: {
        const Matrix& probs = n.aux;
        const double scale = up(0, 0) / probs.rows();
        Matrix da = probs;
        for (int i = 0; i < probs.rows(); ++i) da(i, n.idx[i]) -= 1.0;
        for (size_t i = 0; i < da.size(); ++i) da.data()[i] *= scale;
        accum(n.a, da);
        break;
      }
      case OpKind::Sum: {
        const Matrix& xv = nodes_[n.a].value;
        accum(n.a, Matrix(xv.rows(), xv.cols(), up(0, 0)));
        break;
      }
    }
  }
  return result;
}

double grad_check(const std::function<double(std::span<const double>)>& f,
                  std::span<const double> x, std::span<const double> grad, double eps) {
  if (x.size() != grad.size()) throw DimError("grad_check: gradient length mismatch");
  std::vector<double> work(x.begin(), x.end());
  double worst = 0.0;
  for (size_t i = 0; i < work.size(); ++i) {
    const double saved = work[i];
    work[i] = saved + eps;
    const double fp = f(work);
    work[i] = saved - eps;
    const double fm = f(work);
    work[i] = saved;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw NumericError("grad_check: non-finite function value");
    const double fd = (fp - fm) / (2.0 * eps);
    const double denom = std::max(1e-12, std::fabs(grad[i]) + std::fabs(fd));
    worst = std::max(worst, std::fabs(grad[i] - fd) / denom);
  }
  return worst;
}

}  // namespace tkg
