#include "textvae/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include <Eigen/Dense>

#include "textvae/errors.hpp"

namespace textvae {
namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<EMat>;
using ECMap = Eigen::Map<const EMat>;

ECMap emap(const Tensor& t) { return ECMap(t.data(), t.rows(), t.cols()); }
EMap emap(Tensor& t) { return EMap(t.data(), t.rows(), t.cols()); }

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " +
                       std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                       " and " + std::to_string(b.rows()) + "x" +
                       std::to_string(b.cols()));
}

}  // namespace

const char* op_name(Op op) {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::Matmul: return "matmul";
    case Op::Add: return "add";
    case Op::AddRowwise: return "add_rowwise";
    case Op::Mul: return "mul";
    case Op::Scale: return "scale";
    case Op::AddConst: return "add_const";
    case Op::Sigmoid: return "sigmoid";
    case Op::Tanh: return "tanh";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::ConcatCols: return "concat_cols";
    case Op::SliceCols: return "slice_cols";
    case Op::SoftmaxXent: return "softmax_xent";
    case Op::SumAll: return "sum_all";
    case Op::MeanAll: return "mean_all";
    case Op::MeanAxis0: return "mean_axis0";
    case Op::SumAxis1: return "sum_axis1";
    case Op::LogsumexpAxis1: return "logsumexp_axis1";
    case Op::MaxConst: return "max_const";
    case Op::GatherRows: return "gather_rows";
    case Op::Dropout: return "dropout";
    case Op::RepeatRows: return "repeat_rows";
    case Op::Reshape: return "reshape";
  }
  return "?";
}

const Tensor& Var::value() const {
  if (!defined()) throw ContractError("Var::value on default-constructed Var");
  return g_->value(*this);
}

int Graph::emit(Node node) {
  node.value.require_finite(op_name(node.op));
  nodes_.push_back(std::move(node));
  return static_cast<int>(nodes_.size()) - 1;
}

const Graph::Node& Graph::node(Var v) const {
  check_owned(v, "Graph");
  return nodes_[static_cast<std::size_t>(v.id())];
}

void Graph::check_owned(Var v, const char* who) const {
  if (!v.defined())
    throw ContractError(std::string(who) + ": undefined Var");
  if (v.graph() != this)
    throw ContractError(std::string(who) + ": Var belongs to a different graph");
  if (v.id() < 0 || v.id() >= static_cast<int>(nodes_.size()))
    throw ContractError(std::string(who) + ": Var id out of range");
}

const Tensor& Graph::value(Var v) const { return node(v).value; }

Op Graph::node_op(Var v) const { return node(v).op; }

bool Graph::has_grad(Var v) const { return !node(v).grad.empty(); }

const Tensor& Graph::grad(Var v) const {
  const Node& n = node(v);
  if (n.grad.empty())
    throw ContractError(
        "grad: no gradient for this node (not requires_grad, or backward has "
        "not reached it)");
  return n.grad;
}

Var Graph::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.op = Op::Leaf;
  n.requires_grad = requires_grad;
  n.value = std::move(value);
  return Var(this, emit(std::move(n)));
}

Var Graph::matmul(Var a, Var b) {
  check_owned(a, "matmul");
  check_owned(b, "matmul");
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  if (va.cols() != vb.rows()) shape_error("matmul", va, vb);
  Node n;
  n.op = Op::Matmul;
  n.a = a.id();
  n.b = b.id();
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  n.value = Tensor(va.rows(), vb.cols());
  emap(n.value).noalias() = emap(va) * emap(vb);
  return Var(this, emit(std::move(n)));
}

Var Graph::add(Var a, Var b) {
  check_owned(a, "add");
  check_owned(b, "add");
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  if (!va.same_shape(vb)) shape_error("add", va, vb);
  Node n;
  n.op = Op::Add;
  n.a = a.id();
  n.b = b.id();
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  n.value = Tensor(va.rows(), va.cols());
  for (int i = 0; i < va.size(); ++i) n.value[i] = va[i] + vb[i];
  return Var(this, emit(std::move(n)));
}

Var Graph::add_rowwise(Var a, Var bias) {
  check_owned(a, "add_rowwise");
  check_owned(bias, "add_rowwise");
  const Tensor& va = value(a);
  const Tensor& vb = value(bias);
  if (vb.rows() != 1 || vb.cols() != va.cols()) shape_error("add_rowwise", va, vb);
  Node n;
  n.op = Op::AddRowwise;
  n.a = a.id();
  n.b = bias.id();
  n.requires_grad = node(a).requires_grad || node(bias).requires_grad;
  n.value = Tensor(va.rows(), va.cols());
  for (int r = 0; r < va.rows(); ++r)
    for (int c = 0; c < va.cols(); ++c) n.value(r, c) = va(r, c) + vb(0, c);
  return Var(this, emit(std::move(n)));
}

Var Graph::mul(Var a, Var b) {
  check_owned(a, "mul");
  check_owned(b, "mul");
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  if (!va.same_shape(vb)) shape_error("mul", va, vb);
  Node n;
  n.op = Op::Mul;
  n.a = a.id();
  n.b = b.id();
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  n.value = Tensor(va.rows(), va.cols());
  for (int i = 0; i < va.size(); ++i) n.value[i] = va[i] * vb[i];
  return Var(this, emit(std::move(n)));
}

Var Graph::scale(Var a, double factor) {
  check_owned(a, "scale");
  const Tensor& va = value(a);
  Node n;
  n.op = Op::Scale;
  n.a = a.id();
  n.requires_grad = node(a).requires_grad;
  n.scalar = factor;
  n.value = Tensor(va.rows(), va.cols());
  for (int i = 0; i < va.size(); ++i) n.value[i] = va[i] * factor;
  return Var(this, emit(std::move(n)));
}

Var Graph::add_const(Var a, double c) {
  check_owned(a, "add_const");
  const Tensor& va = value(a);
  Node n;
  n.op = Op::AddConst;
  n.a = a.id();
  n.requires_grad = node(a).requires_grad;
  n.scalar = c;
  n.value = Tensor(va.rows(), va.cols());
  for (int i = 0; i < va.size(); ++i) n.value[i] = va[i] + c;
  return Var(this, emit(std::move(n)));
}

Var Graph::sigmoid(Var a) {
  check_owned(a, "sigmoid");
  const Tensor& va = value(a);
  Node n;
  n.op = Op::Sigmoid;
  n.a = a.id();
  n.requires_grad = node(a).requires_grad;
  n.value = Tensor(va.rows(), va.cols());
  for (int i = 0; i < va.size(); ++i) {
    double x = va[i];
    // Evaluate on the side that keeps exp() from overflowing.
    n.value[i] = x >= 0 ? 1.0 / (1.0 + std::exp(-x))
                        : std::exp(x) / (1.0 + std::exp(x));
  }
  return Var(this, emit(std::move(n)));
}

Var Graph::tanh(Var a) {
  check_owned(a, "tanh");
  const Tensor& va = value(a);
  Node n;
  n.op = Op::Tanh;
  n.a = a.id();
  n.requires_grad = node(a).requires_grad;
  n.value = Tensor(va.rows(), va.cols());
  for (int i = 0; i < va.size(); ++i) n.value[i] = std::tanh(va[i]);
  return Var(this, emit(std::move(n)));
}

Var Graph::exp(Var a) {
  check_owned(a, "exp");
  const Tensor& va = value(a);
  Node n;
  n.op = Op::Exp;
  n.a = a.id();
  n.requires_grad = node(a).requires_grad;
  n.value = Tensor(va.rows(), va.cols());
  for (int i = 0; i < va.size(); ++i) n.value[i] = std::exp(va[i]);
  return Var(this, emit(std::move(n)));
}

Var Graph::log(Var a) {
  check_owned(a, "log");
  const Tensor& va = value(a);
  Node n;
  n.op = Op::Log;
  n.a = a.id();
  n.requires_grad = node(a).requires_grad;
  n.value = Tensor(va.rows(), va.cols());
  for (int i = 0; i < va.size(); ++i) n.value[i] = std::log(va[i]);
  return Var(this, emit(std::move(n)));
}

Var Graph::concat_cols(Var a, Var b) {
  check_owned(a, "concat_cols");
  check_owned(b, "concat_cols");
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  if (va.rows() != vb.rows()) shape_error("concat_cols", va, vb);
  Node n;
  n.op = Op::ConcatCols;
  n.a = a.id();
  n.b = b.id();
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  n.value = Tensor(va.rows(), va.cols() + vb.cols());
  for (int r = 0; r < va.rows(); ++r) {
    for (int c = 0; c < va.cols(); ++c) n.value(r, c) = va(r, c);
    for (int c = 0; c < vb.cols(); ++c) n.value(r, va.cols() + c) = vb(r, c);
  }
  return Var(this, emit(std::move(n)));
}

Var Graph::slice_cols(Var a, int start, int len) {
  check_owned(a, "slice_cols");
  const Tensor& va = value(a);
  if (start < 0 || len <= 0 || start + len > va.cols())
    throw DimensionError("slice_cols: [" + std::to_string(start) + ", " +
                         std::to_string(start + len) + ") out of range for " +
                         std::to_string(va.cols()) + " columns");
  Node n;
  n.op = Op::SliceCols;
  n.a = a.id();
  n.requires_grad = node(a).requires_grad;
  n.scalar = start;
  n.extra = len;
  n.value = Tensor(va.rows(), len);
  for (int r = 0; r < va.rows(); ++r)
    for (int c = 0; c < len; ++c) n.value(r, c) = va(r, start + c);
  return Var(this, emit(std::move(n)));
}

Var Graph::softmax_xent(Var logits, const std::vector<int>& targets) {
  check_owned(logits, "softmax_xent");
  const Tensor& vl = value(logits);
  if (static_cast<int>(targets.size()) != vl.rows())
    throw DimensionError("softmax_xent: " + std::to_string(targets.size()) +
                         " targets for " + std::to_string(vl.rows()) + " rows");
  for (int t : targets)
    if (t < 0 || t >= vl.cols())
      throw ContractError("softmax_xent: target id " + std::to_string(t) +
                          " outside vocabulary of " + std::to_string(vl.cols()));
  Node n;
  n.op = Op::SoftmaxXent;
  n.a = logits.id();
  n.requires_grad = node(logits).requires_grad;
  n.ids = targets;
  n.aux = Tensor(vl.rows(), vl.cols());  // softmax probabilities
  n.value = Tensor(vl.rows(), 1);
  for (int r = 0; r < vl.rows(); ++r) {
    double mx = vl(r, 0);
    for (int c = 1; c < vl.cols(); ++c) mx = std::max(mx, vl(r, c));
    double z = 0.0;
    for (int c = 0; c < vl.cols(); ++c) z += std::exp(vl(r, c) - mx);
    double log_z = mx + std::log(z);
    for (int c = 0; c < vl.cols(); ++c) n.aux(r, c) = std::exp(vl(r, c) - log_z);
    n.value(r, 0) = log_z - vl(r, targets[static_cast<std::size_t>(r)]);
  }
  return Var(this, emit(std::move(n)));
}

Var Graph::sum_all(Var a) {
  check_owned(a, "sum_all");
  Node n;
  n.op = Op::SumAll;
  n.a = a.id();
  n.requires_grad = node(a).requires_grad;
  n.value = Tensor::scalar(value(a).sum());
  return Var(this, emit(std::move(n)));
}

Var Graph::mean_all(Var a) {
  check_owned(a, "mean_all");
  const Tensor& va = value(a);
  Node n;
  n.op = Op::MeanAll;
  n.a = a.id();
  n.requires_grad = node(a).requires_grad;
  n.value = Tensor::scalar(va.sum() / va.size());
  return Var(this, emit(std::move(n)));
}

Var Graph::mean_axis0(Var a) {
  check_owned(a, "mean_axis0");
  const Tensor& va = value(a);
  Node n;
  n.op = Op::MeanAxis0;
  n.a = a.id();
  n.requires_grad = node(a).requires_grad;
  n.value = Tensor(1, va.cols());
  for (int r = 0; r < va.rows(); ++r)
    for (int c = 0; c < va.cols(); ++c) n.value(0, c) += va(r, c);
  for (int c = 0; c < va.cols(); ++c) n.value(0, c) /= va.rows();
  return Var(this, emit(std::move(n)));
}

Var Graph::sum_axis1(Var a) {
  check_owned(a, "sum_axis1");
  const Tensor& va = value(a);
  Node n;
  n.op = Op::SumAxis1;
  n.a = a.id();
  n.requires_grad = node(a).requires_grad;
  n.value = Tensor(va.rows(), 1);
  for (int r = 0; r < va.rows(); ++r) {
    double s = 0.0;
    for (int c = 0; c < va.cols(); ++c) s += va(r, c);
    n.value(r, 0) = s;
  }
  return Var(this, emit(std::move(n)));
}

Var Graph::logsumexp_axis1(Var a) {
  check_owned(a, "logsumexp_axis1");
  const Tensor& va = value(a);
  Node n;
  n.op = Op::LogsumexpAxis1;
  n.a = a.id();
  n.requires_grad = node(a).requires_grad;
  n.aux = Tensor(va.rows(), va.cols());  // softmax weights for backward
  n.value = Tensor(va.rows(), 1);
  for (int r = 0; r < va.rows(); ++r) {
    double mx = va(r, 0);
    for (int c = 1; c < va.cols(); ++c) mx = std::max(mx, va(r, c));
    double z = 0.0;
    for (int c = 0; c < va.cols(); ++c) z += std::exp(va(r, c) - mx);
    double lse = mx + std::log(z);
    n.value(r, 0) = lse;
    for (int c = 0; c < va.cols(); ++c) n.aux(r, c) = std::exp(va(r, c) - lse);
  }
  return Var(this, emit(std::move(n)));
}

Var Graph::max_const(Var a, double c) {
  check_owned(a, "max_const");
  const Tensor& va = value(a);
  Node n;
  n.op = Op::MaxConst;
  n.a = a.id();
  n.requires_grad = node(a).requires_grad;
  n.scalar = c;
  n.value = Tensor(va.rows(), va.cols());
  for (int i = 0; i < va.size(); ++i) n.value[i] = std::max(va[i], c);
  return Var(this, emit(std::move(n)));
}

Var Graph::gather_rows(Var table, const std::vector<int>& ids) {
  check_owned(table, "gather_rows");
  const Tensor& vt = value(table);
  if (ids.empty()) throw ContractError("gather_rows: empty id list");
  for (int i : ids)
    if (i < 0 || i >= vt.rows())
      throw ContractError("gather_rows: row id " + std::to_string(i) +
                          " outside table of " + std::to_string(vt.rows()) +
                          " rows");
  Node n;
  n.op = Op::GatherRows;
  n.a = table.id();
  n.requires_grad = node(table).requires_grad;
  n.ids = ids;
  n.value = Tensor(static_cast<int>(ids.size()), vt.cols());
  for (int r = 0; r < n.value.rows(); ++r)
    for (int c = 0; c < vt.cols(); ++c)
      n.value(r, c) = vt(ids[static_cast<std::size_t>(r)], c);
  return Var(this, emit(std::move(n)));
}

Var Graph::dropout(Var a, double rate, Rng& rng) {
  check_owned(a, "dropout");
  if (rate < 0.0 || rate >= 1.0)
    throw ConfigError("dropout: rate must lie in [0, 1), got " +
                      std::to_string(rate));
  if (rate == 0.0) return a;
  const Tensor& va = value(a);
  double keep = 1.0 - rate;
  Node n;
  n.op = Op::Dropout;
  n.a = a.id();
  n.requires_grad = node(a).requires_grad;
  n.aux = Tensor(va.rows(), va.cols());  // mask with 1/keep at kept entries
  n.value = Tensor(va.rows(), va.cols());
  for (int i = 0; i < va.size(); ++i) {
    double m = rng.uniform() < keep ? 1.0 / keep : 0.0;
    n.aux[i] = m;
    n.value[i] = va[i] * m;
  }
  return Var(this, emit(std::move(n)));
}

Var Graph::repeat_rows(Var a, int k) {
  check_owned(a, "repeat_rows");
  if (k <= 0) throw ContractError("repeat_rows: k must be positive");
  const Tensor& va = value(a);
  Node n;
  n.op = Op::RepeatRows;
  n.a = a.id();
  n.requires_grad = node(a).requires_grad;
  n.extra = k;
  n.value = Tensor(va.rows() * k, va.cols());
  for (int r = 0; r < va.rows(); ++r)
    for (int j = 0; j < k; ++j)
      for (int c = 0; c < va.cols(); ++c) n.value(r * k + j, c) = va(r, c);
  return Var(this, emit(std::move(n)));
}

Var Graph::reshape(Var a, int rows, int cols) {
  check_owned(a, "reshape");
  const Tensor& va = value(a);
  if (rows * cols != va.size())
    throw DimensionError("reshape: cannot view " + std::to_string(va.rows()) +
                         "x" + std::to_string(va.cols()) + " as " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  Node n;
  n.op = Op::Reshape;
  n.a = a.id();
  n.requires_grad = node(a).requires_grad;
  n.value = Tensor(rows, cols);
  for (int i = 0; i < va.size(); ++i) n.value[i] = va[i];
  return Var(this, emit(std::move(n)));
}

Tensor& Graph::grad_buf(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.empty()) n.grad = Tensor(n.value.rows(), n.value.cols());
  return n.grad;
}

void Graph::backward(Var loss) {
  check_owned(loss, "backward");
  const Node& ln = node(loss);
  if (!ln.value.is_scalar())
    throw ContractError("backward: loss must be scalar, got " +
                        std::to_string(ln.value.rows()) + "x" +
                        std::to_string(ln.value.cols()));
  if (backward_done_)
    throw ContractError("backward: may only be called once per graph");
  backward_done_ = true;
  if (!ln.requires_grad) return;
  grad_buf(loss.id())[0] = 1.0;
  for (int id = loss.id(); id >= 0; --id) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.empty() || n.op == Op::Leaf) continue;
    backprop_node(id);
  }
}

void Graph::backprop_node(int id) {
  // Reads node fields by value/reference before touching grad buffers; the
  // nodes_ vector is not resized during backward, so references stay valid.
  Node& n = nodes_[static_cast<std::size_t>(id)];
  const Tensor& g = n.grad;
  auto needs = [&](int in) {
    return in >= 0 && nodes_[static_cast<std::size_t>(in)].requires_grad;
  };
  const Tensor& va = n.a >= 0 ? nodes_[static_cast<std::size_t>(n.a)].value : n.value;

  switch (n.op) {
    case Op::Leaf:
      break;
    case Op::Matmul: {
      const Tensor& vb = nodes_[static_cast<std::size_t>(n.b)].value;
      if (needs(n.a)) emap(grad_buf(n.a)).noalias() += emap(g) * emap(vb).transpose();
      if (needs(n.b)) emap(grad_buf(n.b)).noalias() += emap(va).transpose() * emap(g);
      break;
    }
    case Op::Add: {
      if (needs(n.a)) {
        Tensor& ga = grad_buf(n.a);
        for (int i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (needs(n.b)) {
        Tensor& gb = grad_buf(n.b);
        for (int i = 0; i < g.size(); ++i) gb[i] += g[i];
      }
      break;
    }
    case Op::AddRowwise: {
      if (needs(n.a)) {
        Tensor& ga = grad_buf(n.a);
        for (int i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (needs(n.b)) {
        Tensor& gb = grad_buf(n.b);
        for (int r = 0; r < g.rows(); ++r)
          for (int c = 0; c < g.cols(); ++c) gb(0, c) += g(r, c);
      }
      break;
    }
    case Op::Mul: {
      const Tensor& vb = nodes_[static_cast<std::size_t>(n.b)].value;
      if (needs(n.a)) {
        Tensor& ga = grad_buf(n.a);
        for (int i = 0; i < g.size(); ++i) ga[i] += g[i] * vb[i];
      }
      if (needs(n.b)) {
        Tensor& gb = grad_buf(n.b);
        for (int i = 0; i < g.size(); ++i) gb[i] += g[i] * va[i];
      }
      break;
    }
    case Op::Scale: {
      if (needs(n.a)) {
        Tensor& ga = grad_buf(n.a);
        for (int i = 0; i < g.size(); ++i) ga[i] += g[i] * n.scalar;
      }
      break;
    }
    case Op::AddConst: {
      if (needs(n.a)) {
        Tensor& ga = grad_buf(n.a);
        for (int i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      break;
    }
    case Op::Sigmoid: {
      if (needs(n.a)) {
        Tensor& ga = grad_buf(n.a);
        for (int i = 0; i < g.size(); ++i) {
          double y = n.value[i];
          ga[i] += g[i] * y * (1.0 - y);
        }
      }
      break;
    }
    case Op::Tanh: {
      if (needs(n.a)) {
        Tensor& ga = grad_buf(n.a);
        for (int i = 0; i < g.size(); ++i) {
          double y = n.value[i];
          ga[i] += g[i] * (1.0 - y * y);
        }
      }
      break;
    }
    case Op::Exp: {
      if (needs(n.a)) {
        Tensor& ga = grad_buf(n.a);
        for (int i = 0; i < g.size(); ++i) ga[i] += g[i] * n.value[i];
      }
      break;
    }
    case Op::Log: {
      if (needs(n.a)) {
        Tensor& ga = grad_buf(n.a);
        for (int i = 0; i < g.size(); ++i) ga[i] += g[i] / va[i];
      }
      break;
    }
    case Op::ConcatCols: {
      const Tensor& vb = nodes_[static_cast<std::size_t>(n.b)].value;
      if (needs(n.a)) {
        Tensor& ga = grad_buf(n.a);
        for (int r = 0; r < va.rows(); ++r)
          for (int c = 0; c < va.cols(); ++c) ga(r, c) += g(r, c);
      }
      if (needs(n.b)) {
        Tensor& gb = grad_buf(n.b);
        for (int r = 0; r < vb.rows(); ++r)
          for (int c = 0; c < vb.cols(); ++c) gb(r, c) += g(r, va.cols() + c);
      }
      break;
    }
    case Op::SliceCols: {
      if (needs(n.a)) {
        Tensor& ga = grad_buf(n.a);
        int start = static_cast<int>(n.scalar);
        for (int r = 0; r < g.rows(); ++r)
          for (int c = 0; c < g.cols(); ++c) ga(r, start + c) += g(r, c);
      }
      break;
    }
    case Op::SoftmaxXent: {
      if (needs(n.a)) {
        Tensor& ga = grad_buf(n.a);
        for (int r = 0; r < n.aux.rows(); ++r) {
          double gr = g(r, 0);
          int t = n.ids[static_cast<std::size_t>(r)];
          for (int c = 0; c < n.aux.cols(); ++c) ga(r, c) += gr * n.aux(r, c);
          ga(r, t) -= gr;
        }
      }
      break;
    }
    case Op::SumAll: {
      if (needs(n.a)) {
        Tensor& ga = grad_buf(n.a);
        double gs = g[0];
        for (int i = 0; i < ga.size(); ++i) ga[i] += gs;
      }
      break;
    }
    case Op::MeanAll: {
      if (needs(n.a)) {
        Tensor& ga = grad_buf(n.a);
        double gs = g[0] / va.size();
        for (int i = 0; i < ga.size(); ++i) ga[i] += gs;
      }
      break;
    }
    case Op::MeanAxis0: {
      if (needs(n.a)) {
        Tensor& ga = grad_buf(n.a);
        double inv = 1.0 / va.rows();
        for (int r = 0; r < ga.rows(); ++r)
          for (int c = 0; c < ga.cols(); ++c) ga(r, c) += g(0, c) * inv;
      }
      break;
    }
    case Op::SumAxis1: {
      if (needs(n.a)) {
        Tensor& ga = grad_buf(n.a);
        for (int r = 0; r < ga.rows(); ++r)
          for (int c = 0; c < ga.cols(); ++c) ga(r, c) += g(r, 0);
      }
      break;
    }
    case Op::LogsumexpAxis1: {
      if (needs(n.a)) {
        Tensor& ga = grad_buf(n.a);
        for (int r = 0; r < ga.rows(); ++r)
          for (int c = 0; c < ga.cols(); ++c) ga(r, c) += g(r, 0) * n.aux(r, c);
      }
      break;
    }
    case Op::MaxConst: {
      if (needs(n.a)) {
        Tensor& ga = grad_buf(n.a);
        for (int i = 0; i < g.size(); ++i)
          if (va[i] > n.scalar) ga[i] += g[i];
      }
      break;
    }
    case Op::GatherRows: {
      if (needs(n.a)) {
        Tensor& ga = grad_buf(n.a);
        for (int r = 0; r < g.rows(); ++r) {
          int src = n.ids[static_cast<std::size_t>(r)];
          for (int c = 0; c < g.cols(); ++c) ga(src, c) += g(r, c);
        }
      }
      break;
    }
    case Op::Dropout: {
      if (needs(n.a)) {
        Tensor& ga = grad_buf(n.a);
        for (int i = 0; i < g.size(); ++i) ga[i] += g[i] * n.aux[i];
      }
      break;
    }
    case Op::RepeatRows: {
      if (needs(n.a)) {
        Tensor& ga = grad_buf(n.a);
        int k = n.extra;
        for (int r = 0; r < ga.rows(); ++r)
          for (int j = 0; j < k; ++j)
            for (int c = 0; c < ga.cols(); ++c) ga(r, c) += g(r * k + j, c);
      }
      break;
    }
    case Op::Reshape: {
      if (needs(n.a)) {
        Tensor& ga = grad_buf(n.a);
        for (int i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      break;
    }
  }
}

Var operator+(Var a, Var b) {
  if (!a.defined()) throw ContractError("operator+: undefined Var");
  return a.graph()->add(a, b);
}

Var operator*(Var a, Var b) {
  if (!a.defined()) throw ContractError("operator*: undefined Var");
  return a.graph()->mul(a, b);
}

Var operator-(Var a, Var b) {
  if (!a.defined()) throw ContractError("operator-: undefined Var");
  Graph* g = a.graph();
  return g->add(a, g->scale(b, -1.0));
}

}  // namespace textvae
