#pragma once

#include <functional>
#include <span>
#include <vector>

#include "tkgode/matrix.hpp"

namespace tkg {

enum class OpKind {
  Leaf,
  MatMul,
  Add,
  Sub,
  Scale,
  Hadamard,
  Tanh,
  Sigmoid,
  GatherRows,
  ScatterMeanRows,
  RowKron,
  RowSoftmaxCrossEntropy,
  Sum,
};

/// Handle to a recorded node. Cheap to copy; only valid for the tape that
/// issued it.
struct Var {
  int id = -1;
  int rows = 0;
  int cols = 0;
};

class Tape;

/// Per-node gradients produced by a reverse sweep. Nodes the loss never
/// reached report a zero matrix of the node's shape.
class Gradients {
 public:
  const Matrix& at(Var v);
  bool reached(Var v) const;

 private:
  friend class Tape;
  std::vector<Matrix> grads_;
  std::vector<std::pair<int, int>> shapes_;
};

/// Reverse-mode tape over dense f64 matrices.
///
/// Recording appends nodes in topological order; node values are immutable
/// once stored. A tape is single-writer while recording; backward() is const
/// and may run concurrently with reads. Independent tapes are independent.
class Tape {
 public:
  /// New leaf holding a value. Parameters and constants both enter this way;
  /// the caller decides which node ids it treats as parameters.
  Var leaf(Matrix value);

  Var matmul(Var a, Var b, bool trans_b = false);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  /// Broadcast product by a 1x1 scalar node. Gradient flows into both inputs.
  Var scale(Var x, Var s);
  /// Elementwise product. b may be 1 x cols; it is then broadcast across rows.
  Var hadamard(Var a, Var b);
  Var tanh(Var x);
  Var sigmoid(Var x);
  /// out[i] = x[rows[i]], one output row per index (duplicates allowed).
  Var gather_rows(Var x, std::vector<int> rows);
  /// out has num_groups rows; out[g] = mean of input rows i with group[i] == g.
  /// Groups with no contributing rows are zero. The backward pass hands each
  /// contributing row grad_out[g] / |group g|.
  Var scatter_mean_rows(Var x, std::vector<int> groups, int num_groups);
  /// Row-wise Kronecker product: out[i, p*cols_b + q] = a[i,p] * b[i,q].
  Var row_kron(Var a, Var b);
  /// Mean over rows of -log softmax(scores_row)[target_row]. Max-subtraction
  /// stabilized. Output is 1x1.
  Var softmax_cross_entropy(Var scores, std::vector<int> targets);
  /// Sum of all entries, 1x1.
  Var sum(Var x);

  const Matrix& value(Var v) const;
  size_t size() const { return nodes_.size(); }

  /// Reverse sweep from a 1x1 loss node (seed 1).
  Gradients backward(Var loss) const;
  /// Reverse sweep from any node with an explicit output cotangent.
  Gradients backward(Var output, const Matrix& seed) const;

 private:
  struct Node {
    OpKind kind = OpKind::Leaf;
    int a = -1;
    int b = -1;
    bool trans_b = false;
    std::vector<int> idx;  // gather rows / scatter groups / cross-entropy targets
    int groups = 0;        // scatter output row count
    Matrix value;
    Matrix aux;  // cached softmax probabilities for the cross-entropy backward
  };

  Var push(Node n);
  void check_var(Var v, const char* who) const;

  std::vector<Node> nodes_;
};

/// Max over coordinates of |g_i - fd_i| / max(1e-12, |g_i| + |fd_i|), where fd
/// is the central finite difference of f at x with step eps and g is the
/// candidate gradient under test.
double grad_check(const std::function<double(std::span<const double>)>& f,
                  std::span<const double> x, std::span<const double> grad, double eps);

}  // namespace tkg
