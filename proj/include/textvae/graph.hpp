#pragma once

#include <cstdint>
#include <vector>

#include "textvae/rng.hpp"
#include "textvae/tensor.hpp"

namespace textvae {

class Graph;

enum class Op : std::uint8_t {
  Leaf,
  Matmul,
  Add,
  AddRowwise,
  Mul,
  Scale,
  AddConst,
  Sigmoid,
  Tanh,
  Exp,
  Log,
  ConcatCols,
  SliceCols,
  SoftmaxXent,
  SumAll,
  MeanAll,
  MeanAxis0,
  SumAxis1,
  LogsumexpAxis1,
  MaxConst,
  GatherRows,
  Dropout,
  RepeatRows,
  Reshape,
};

const char* op_name(Op op);

// Handle to a node on a Graph. Cheap to copy; valid as long as the graph lives.
class Var {
 public:
  Var() = default;
  bool defined() const { return g_ != nullptr; }
  Graph* graph() const { return g_; }
  int id() const { return id_; }
  const Tensor& value() const;
  int rows() const { return value().rows(); }
  int cols() const { return value().cols(); }

 private:
  friend class Graph;
  Var(Graph* g, int id) : g_(g), id_(id) {}
  Graph* g_ = nullptr;
  int id_ = -1;
};

// Reverse-mode tape. Nodes are appended in forward (topological) order and
// hold the op kind, input ids, the forward value, and whatever activations the
// backward rule needs. backward() sweeps the records once, newest first.
//
// Every forward op validates shapes and rejects non-finite results. Nodes with
// requires_grad=false are stored for their values but carry no differentiation
// record: backward never visits them and no gradient is allocated.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var leaf(Tensor value, bool requires_grad);
  Var constant(Tensor value) { return leaf(std::move(value), false); }
  Var zeros(int rows, int cols) { return constant(Tensor(rows, cols)); }

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  // a: (m x n), bias: (1 x n) added to every row.
  Var add_rowwise(Var a, Var bias);
  Var mul(Var a, Var b);
  Var scale(Var a, double factor);
  Var add_const(Var a, double c);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var exp(Var a);
  Var log(Var a);
  Var concat_cols(Var a, Var b);
  Var slice_cols(Var a, int start, int len);
  // logits: (n x v), targets: n class ids. Result (n x 1) of per-row
  // cross-entropy, computed with max-subtracted log-sum-exp.
  Var softmax_xent(Var logits, const std::vector<int>& targets);
  Var sum_all(Var a);
  Var mean_all(Var a);
  // (m x n) -> (1 x n), mean over rows.
  Var mean_axis0(Var a);
  // (m x n) -> (m x 1), sum over columns.
  Var sum_axis1(Var a);
  // (m x n) -> (m x 1), log-sum-exp over columns, max-stabilized.
  Var logsumexp_axis1(Var a);
  // Elementwise max(value, c). Subgradient at value == c is 0 (clamped side).
  Var max_const(Var a, double c);
  // table: (v x e), ids: n row indices. Result (n x e).
  Var gather_rows(Var table, const std::vector<int>& ids);
  // Inverted dropout: keep with probability 1-rate, scale kept entries by
  // 1/(1-rate). rate == 0 returns the input unchanged.
  Var dropout(Var a, double rate, Rng& rng);
  // (m x n) -> (m*k x n); output row i*k+j copies input row i.
  Var repeat_rows(Var a, int k);
  Var reshape(Var a, int rows, int cols);

  // Seeds d(loss)/d(loss) = 1 and accumulates gradients into every
  // requires_grad ancestor. loss must be scalar. May be called once per graph.
  void backward(Var loss);

  const Tensor& value(Var v) const;
  // Gradient accumulated for v by backward(). Throws ContractError when none
  // was produced (not a requires_grad node, or unreachable from the loss).
  const Tensor& grad(Var v) const;
  bool has_grad(Var v) const;

  std::size_t num_nodes() const { return nodes_.size(); }
  Op node_op(Var v) const;

 private:
  struct Node {
    Op op;
    int a = -1;
    int b = -1;
    bool requires_grad = false;
    Tensor value;
    Tensor grad;
    Tensor aux;             // saved activations: softmax probs, dropout mask, ...
    std::vector<int> ids;   // gather indices / xent targets
    double scalar = 0.0;    // op constant: scale factor, threshold, slice start
    int extra = 0;          // slice width / repeat count
  };

  int emit(Node node);
  const Node& node(Var v) const;
  Tensor& grad_buf(int id);
  void check_owned(Var v, const char* who) const;
  void backprop_node(int id);

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

// Expression helpers; operands must share a graph.
Var operator+(Var a, Var b);
Var operator*(Var a, Var b);
Var operator-(Var a, Var b);

}  // namespace textvae
