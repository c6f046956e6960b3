#pragma once

// Reverse-mode differentiation over dense matrices.
//
// A Graph is an arena of nodes. Every operation appends a node whose parents
// already live in the arena, so arena order is a topological order and the
// backward sweep is a single reverse scan. Leaves created with variable()
// collect the gradient of the scalar passed to backward(), summed over every
// use of the leaf.
//
//   Graph g;
//   Var w = g.variable(W);
//   Var x = g.constant(X);
//   Var loss = sum(tanh(matmul(w, x)));
//   g.backward(loss);
//   const Matrix& dw = g.grad(w);

#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ltsgat/autodiff/matrix.hpp"

namespace ltsgat::ad {

enum class Op : std::uint8_t {
  Leaf,
  MatMul,
  Affine,
  Transpose,
  Add,
  Sub,
  Hadamard,
  ConcatRows,
  ConcatCols,
  Softmax,
  Sigmoid,
  Tanh,
  LeakyRelu,
  Exp,
  Log,
  Mean,
  Sum,
  Scale,
  GatherRows,
  GatherCols,
  GradReverse,
};

inline const char* op_name(Op op) {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::MatMul: return "matmul";
    case Op::Affine: return "affine";
    case Op::Transpose: return "transpose";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Hadamard: return "hadamard";
    case Op::ConcatRows: return "concat_rows";
    case Op::ConcatCols: return "concat_cols";
    case Op::Softmax: return "softmax";
    case Op::Sigmoid: return "sigmoid";
    case Op::Tanh: return "tanh";
    case Op::LeakyRelu: return "leaky_relu";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Mean: return "mean";
    case Op::Sum: return "sum";
    case Op::Scale: return "scale";
    case Op::GatherRows: return "gather_rows";
    case Op::GatherCols: return "gather_cols";
    case Op::GradReverse: return "grad_reverse";
  }
  return "?";
}

// Axis::Rows runs along the row index (one result per column, numpy axis 0);
// Axis::Cols runs along the column index (one result per row, numpy axis 1).
enum class Axis : std::uint8_t { Rows, Cols };

class Graph;

class Var {
 public:
  Var() = default;

  Graph* graph() const noexcept { return graph_; }
  std::uint32_t id() const noexcept { return id_; }
  bool valid() const noexcept { return graph_ != nullptr; }

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  friend class Graph;
  Var(Graph* g, std::uint32_t id) : graph_(g), id_(id) {}

  Graph* graph_ = nullptr;
  std::uint32_t id_ = 0;
};

class Graph {
 public:
  enum class BiasMode : std::uint8_t { Full, PerRow, PerCol, Scalar };

  struct Node {
    Matrix value;
    Matrix grad;  // allocated on first contribution
    Op op = Op::Leaf;
    bool requires_grad = false;
    std::vector<std::uint32_t> parents;
    std::vector<std::size_t> indices;  // gather
    Axis axis = Axis::Rows;
    BiasMode bias = BiasMode::Full;
    double scalar = 0.0;  // scale factor, leaky slope, reversal strength
  };

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  Var variable(Matrix value) { return leaf(std::move(value), true); }
  Var constant(Matrix value) { return leaf(std::move(value), false); }

  const Matrix& value(Var v) const { return node(v).value; }
  Op op(Var v) const { return node(v).op; }
  bool requires_grad(Var v) const { return node(v).requires_grad; }
  std::span<const std::uint32_t> parents(Var v) const { return node(v).parents; }

  // Gradient of the last backward() target with respect to v. Nodes the sweep
  // never reached report zeros.
  const Matrix& grad(Var v) {
    Node& n = node_mut(v);
    ensure_grad(n);
    return n.grad;
  }

  std::size_t size() const noexcept { return nodes_.size(); }

  // Single backward sweep from a 1x1 node. A second call without
  // zero_grad() in between is rejected so gradients are never silently
  // double counted.
  void backward(Var loss) {
    check_owner(loss);
    Node& root = node_mut(loss);
    if (root.value.rows() != 1 || root.value.cols() != 1) {
      throw ShapeError("backward: loss must be 1x1, got " + root.value.shape());
    }
    if (backward_done_) {
      throw std::logic_error("backward: gradients already populated; call zero_grad() first");
    }
    backward_done_ = true;
    ensure_grad(root);
    root.grad[0] += 1.0;
    for (std::int64_t id = loss.id(); id >= 0; --id) {
      Node& n = nodes_[static_cast<std::size_t>(id)];
      if (n.op == Op::Leaf || !n.requires_grad || n.grad.empty()) continue;
      for (std::uint32_t p : n.parents) {
        if (p >= static_cast<std::uint32_t>(id)) {
          throw std::logic_error("backward: graph is not a DAG (node " + std::to_string(id) +
                                 " depends on " + std::to_string(p) + ")");
        }
      }
      propagate(n);
    }
  }

  void zero_grad() {
    for (Node& n : nodes_) n.grad = Matrix();
    backward_done_ = false;
  }

  // Internal construction hook used by the operation functions below.
  Var emplace(Node n) {
    bool needs = false;
    for (std::uint32_t p : n.parents) needs = needs || nodes_[p].requires_grad;
    n.requires_grad = needs;
    nodes_.push_back(std::move(n));
    return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
  }

  void check_owner(Var v) const {
    if (v.graph() != this) throw std::invalid_argument("Var belongs to a different graph");
  }

  const Node& node(Var v) const {
    check_owner(v);
    return nodes_[v.id()];
  }

 private:
  Var leaf(Matrix value, bool requires_grad) {
    Node n;
    n.value = std::move(value);
    n.op = Op::Leaf;
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
  }

  Node& node_mut(Var v) {
    check_owner(v);
    return nodes_[v.id()];
  }

  static void ensure_grad(Node& n) {
    if (n.grad.empty() && !n.value.empty()) n.grad = Matrix(n.value.rows(), n.value.cols());
  }

  Matrix* target(std::uint32_t id) {
    Node& p = nodes_[id];
    if (!p.requires_grad) return nullptr;
    ensure_grad(p);
    return &p.grad;
  }

  void propagate(const Node& n);

  std::deque<Node> nodes_;
  bool backward_done_ = false;
};

inline const Matrix& Var::value() const {
  if (graph_ == nullptr) throw std::logic_error("Var: uninitialized handle");
  return graph_->value(*this);
}

namespace detail {

inline Graph& same_graph(Var a, Var b) {
  if (!a.valid() || a.graph() != b.graph()) {
    throw std::invalid_argument("operands belong to different graphs");
  }
  return *a.graph();
}

inline Graph::Node make(Op op, Matrix value, std::vector<std::uint32_t> parents) {
  Graph::Node n;
  n.op = op;
  n.value = std::move(value);
  n.parents = std::move(parents);
  return n;
}

inline double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Primitive operations
// ---------------------------------------------------------------------------

inline Var matmul(Var a, Var b) {
  Graph& g = detail::same_graph(a, b);
  return g.emplace(detail::make(Op::MatMul, matmul(a.value(), b.value()), {a.id(), b.id()}));
}

// lhs * rhs + bias. The bias is either the full product shape, a column
// (rows x 1, repeated across columns), a row (1 x cols, repeated down rows),
// or 1x1.
inline Var affine(Var lhs, Var rhs, Var bias) {
  Graph& g = detail::same_graph(lhs, rhs);
  detail::same_graph(lhs, bias);
  Matrix out = matmul(lhs.value(), rhs.value());
  const Matrix& b = bias.value();
  Graph::BiasMode mode;
  if (b.same_shape(out)) {
    mode = Graph::BiasMode::Full;
  } else if (b.rows() == out.rows() && b.cols() == 1) {
    mode = Graph::BiasMode::PerRow;
  } else if (b.rows() == 1 && b.cols() == out.cols()) {
    mode = Graph::BiasMode::PerCol;
  } else if (b.rows() == 1 && b.cols() == 1) {
    mode = Graph::BiasMode::Scalar;
  } else {
    throw ShapeError("affine: bias shape " + b.shape() + " does not broadcast to " + out.shape());
  }
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) {
      switch (mode) {
        case Graph::BiasMode::Full: out(r, c) += b(r, c); break;
        case Graph::BiasMode::PerRow: out(r, c) += b(r, 0); break;
        case Graph::BiasMode::PerCol: out(r, c) += b(0, c); break;
        case Graph::BiasMode::Scalar: out(r, c) += b[0]; break;
      }
    }
  }
  auto n = detail::make(Op::Affine, std::move(out), {lhs.id(), rhs.id(), bias.id()});
  n.bias = mode;
  return g.emplace(std::move(n));
}

inline Var transpose(Var a) {
  return a.graph()->emplace(detail::make(Op::Transpose, transpose(a.value()), {a.id()}));
}

namespace detail {
template <class F>
Var elementwise2(Op op, const char* name, Var a, Var b, F f) {
  Graph& g = same_graph(a, b);
  require_same_shape(name, a.value(), b.value());
  Matrix out(a.rows(), a.cols());
  const Matrix& x = a.value();
  const Matrix& y = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(x[i], y[i]);
  return g.emplace(make(op, std::move(out), {a.id(), b.id()}));
}

template <class F>
Matrix map(const Matrix& x, F f) {
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  return out;
}
}  // namespace detail

inline Var add(Var a, Var b) {
  return detail::elementwise2(Op::Add, "add", a, b, [](double x, double y) { return x + y; });
}

inline Var sub(Var a, Var b) {
  return detail::elementwise2(Op::Sub, "sub", a, b, [](double x, double y) { return x - y; });
}

inline Var hadamard(Var a, Var b) {
  return detail::elementwise2(Op::Hadamard, "hadamard", a, b,
                              [](double x, double y) { return x * y; });
}

inline Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no operands");
  Graph& g = *parts.front().graph();
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  std::vector<std::uint32_t> ids;
  ids.reserve(parts.size());
  for (Var p : parts) {
    detail::same_graph(parts.front(), p);
    if (p.cols() != cols) {
      throw ShapeError("concat_rows: shape mismatch " + parts.front().value().shape() + " vs " +
                       p.value().shape());
    }
    rows += p.rows();
    ids.push_back(p.id());
  }
  Matrix out(rows, cols);
  std::size_t offset = 0;
  for (Var p : parts) {
    const auto src = p.value().data();
    std::copy(src.begin(), src.end(), out.data().begin() + static_cast<std::ptrdiff_t>(offset));
    offset += src.size();
  }
  return g.emplace(detail::make(Op::ConcatRows, std::move(out), std::move(ids)));
}

inline Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no operands");
  Graph& g = *parts.front().graph();
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  std::vector<std::uint32_t> ids;
  ids.reserve(parts.size());
  for (Var p : parts) {
    detail::same_graph(parts.front(), p);
    if (p.rows() != rows) {
      throw ShapeError("concat_cols: shape mismatch " + parts.front().value().shape() + " vs " +
                       p.value().shape());
    }
    cols += p.cols();
    ids.push_back(p.id());
  }
  Matrix out(rows, cols);
  std::size_t offset = 0;
  for (Var p : parts) {
    const Matrix& v = p.value();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < v.cols(); ++c) out(r, offset + c) = v(r, c);
    offset += v.cols();
  }
  return g.emplace(detail::make(Op::ConcatCols, std::move(out), std::move(ids)));
}

inline Var concat_rows(std::initializer_list<Var> parts) {
  return concat_rows(std::span<const Var>(parts.begin(), parts.size()));
}
inline Var concat_cols(std::initializer_list<Var> parts) {
  return concat_cols(std::span<const Var>(parts.begin(), parts.size()));
}

// Max-subtracted softmax. Axis::Rows normalizes each column, Axis::Cols each
// row.
inline Var softmax(Var a, Axis axis) {
  const Matrix& x = a.value();
  const std::size_t len = axis == Axis::Rows ? x.rows() : x.cols();
  const std::size_t count = axis == Axis::Rows ? x.cols() : x.rows();
  if (len == 0) throw ShapeError("softmax: axis of length 0 in " + x.shape());
  Matrix out(x.rows(), x.cols());
  auto at = [&](Matrix& m, std::size_t line, std::size_t i) -> double& {
    return axis == Axis::Rows ? m(i, line) : m(line, i);
  };
  auto cat = [&](std::size_t line, std::size_t i) {
    return axis == Axis::Rows ? x(i, line) : x(line, i);
  };
  for (std::size_t line = 0; line < count; ++line) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < len; ++i) mx = std::max(mx, cat(line, i));
    double total = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      const double e = std::exp(cat(line, i) - mx);
      at(out, line, i) = e;
      total += e;
    }
    for (std::size_t i = 0; i < len; ++i) at(out, line, i) /= total;
  }
  auto n = detail::make(Op::Softmax, std::move(out), {a.id()});
  n.axis = axis;
  return a.graph()->emplace(std::move(n));
}

inline Var sigmoid(Var a) {
  return a.graph()->emplace(
      detail::make(Op::Sigmoid, detail::map(a.value(), detail::sigmoid), {a.id()}));
}

inline Var tanh(Var a) {
  return a.graph()->emplace(
      detail::make(Op::Tanh, detail::map(a.value(), [](double x) { return std::tanh(x); }),
                   {a.id()}));
}

inline Var leaky_relu(Var a, double negative_slope) {
  auto n = detail::make(
      Op::LeakyRelu,
      detail::map(a.value(), [=](double x) { return x >= 0.0 ? x : negative_slope * x; }),
      {a.id()});
  n.scalar = negative_slope;
  return a.graph()->emplace(std::move(n));
}

inline Var exp(Var a) {
  return a.graph()->emplace(
      detail::make(Op::Exp, detail::map(a.value(), [](double x) { return std::exp(x); }),
                   {a.id()}));
}

inline Var log(Var a) {
  for (double v : a.value().data()) {
    if (!(v > 0.0)) throw std::domain_error("log: non-positive input " + std::to_string(v));
  }
  return a.graph()->emplace(
      detail::make(Op::Log, detail::map(a.value(), [](double x) { return std::log(x); }),
                   {a.id()}));
}

// Average along an axis: Axis::Rows gives 1 x cols, Axis::Cols gives rows x 1.
inline Var mean(Var a, Axis axis) {
  const Matrix& x = a.value();
  const std::size_t len = axis == Axis::Rows ? x.rows() : x.cols();
  if (len == 0) throw ShapeError("mean: axis of length 0 in " + x.shape());
  Matrix out = axis == Axis::Rows ? Matrix(1, x.cols()) : Matrix(x.rows(), 1);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) {
      if (axis == Axis::Rows)
        out(0, c) += x(r, c);
      else
        out(r, 0) += x(r, c);
    }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] /= static_cast<double>(len);
  auto n = detail::make(Op::Mean, std::move(out), {a.id()});
  n.axis = axis;
  return a.graph()->emplace(std::move(n));
}

inline Var sum(Var a) {
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  return a.graph()->emplace(detail::make(Op::Sum, Matrix(1, 1, total), {a.id()}));
}

inline Var scale(Var a, double factor) {
  auto n = detail::make(Op::Scale,
                        detail::map(a.value(), [=](double x) { return factor * x; }), {a.id()});
  n.scalar = factor;
  return a.graph()->emplace(std::move(n));
}

// Row selection; indices may repeat (gradients accumulate).
inline Var gather_rows(Var a, std::vector<std::size_t> rows) {
  const Matrix& x = a.value();
  Matrix out(rows.size(), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= x.rows()) {
      throw std::out_of_range("gather_rows: index " + std::to_string(rows[i]) + " outside " +
                              x.shape());
    }
    for (std::size_t c = 0; c < x.cols(); ++c) out(i, c) = x(rows[i], c);
  }
  auto n = detail::make(Op::GatherRows, std::move(out), {a.id()});
  n.indices = std::move(rows);
  return a.graph()->emplace(std::move(n));
}

inline Var gather_cols(Var a, std::vector<std::size_t> cols) {
  const Matrix& x = a.value();
  Matrix out(x.rows(), cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j] >= x.cols()) {
      throw std::out_of_range("gather_cols: index " + std::to_string(cols[j]) + " outside " +
                              x.shape());
    }
    for (std::size_t r = 0; r < x.rows(); ++r) out(r, j) = x(r, cols[j]);
  }
  auto n = detail::make(Op::GatherCols, std::move(out), {a.id()});
  n.indices = std::move(cols);
  return a.graph()->emplace(std::move(n));
}

// Identity forward; backward multiplies the incoming gradient by -lambda.
inline Var grad_reverse(Var a, double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("grad_reverse: lambda must be >= 0");
  auto n = detail::make(Op::GradReverse, a.value(), {a.id()});
  n.scalar = lambda;
  return a.graph()->emplace(std::move(n));
}

// ---------------------------------------------------------------------------
// Backward rules
// ---------------------------------------------------------------------------

inline void Graph::propagate(const Node& n) {
  const Matrix& dy = n.grad;
  const Matrix& y = n.value;
  auto in = [&](std::size_t k) -> const Matrix& { return nodes_[n.parents[k]].value; };

  switch (n.op) {
    case Op::Leaf:
      return;
    case Op::MatMul:
    case Op::Affine: {
      if (Matrix* da = target(n.parents[0])) gemm_nt_accumulate(dy, in(1), *da);
      if (Matrix* db = target(n.parents[1])) gemm_tn_accumulate(in(0), dy, *db);
      if (n.op == Op::Affine) {
        if (Matrix* dbias = target(n.parents[2])) {
          for (std::size_t r = 0; r < dy.rows(); ++r)
            for (std::size_t c = 0; c < dy.cols(); ++c) {
              switch (n.bias) {
                case BiasMode::Full: (*dbias)(r, c) += dy(r, c); break;
                case BiasMode::PerRow: (*dbias)(r, 0) += dy(r, c); break;
                case BiasMode::PerCol: (*dbias)(0, c) += dy(r, c); break;
                case BiasMode::Scalar: (*dbias)[0] += dy(r, c); break;
              }
            }
        }
      }
      return;
    }
    case Op::Transpose:
      if (Matrix* da = target(n.parents[0])) {
        for (std::size_t r = 0; r < dy.rows(); ++r)
          for (std::size_t c = 0; c < dy.cols(); ++c) (*da)(c, r) += dy(r, c);
      }
      return;
    case Op::Add:
    case Op::Sub: {
      const double sign = n.op == Op::Sub ? -1.0 : 1.0;
      if (Matrix* da = target(n.parents[0]))
        for (std::size_t i = 0; i < dy.size(); ++i) (*da)[i] += dy[i];
      if (Matrix* db = target(n.parents[1]))
        for (std::size_t i = 0; i < dy.size(); ++i) (*db)[i] += sign * dy[i];
      return;
    }
    case Op::Hadamard: {
      // Read both inputs before writing: a node may be multiplied by itself.
      const Matrix& a = in(0);
      const Matrix& b = in(1);
      Matrix ga(dy.rows(), dy.cols()), gb(dy.rows(), dy.cols());
      for (std::size_t i = 0; i < dy.size(); ++i) {
        ga[i] = dy[i] * b[i];
        gb[i] = dy[i] * a[i];
      }
      if (Matrix* da = target(n.parents[0]))
        for (std::size_t i = 0; i < dy.size(); ++i) (*da)[i] += ga[i];
      if (Matrix* db = target(n.parents[1]))
        for (std::size_t i = 0; i < dy.size(); ++i) (*db)[i] += gb[i];
      return;
    }
    case Op::ConcatRows: {
      std::size_t offset = 0;
      for (std::uint32_t p : n.parents) {
        const std::size_t len = nodes_[p].value.size();
        if (Matrix* dp = target(p))
          for (std::size_t i = 0; i < len; ++i) (*dp)[i] += dy[offset + i];
        offset += len;
      }
      return;
    }
    case Op::ConcatCols: {
      std::size_t offset = 0;
      for (std::uint32_t p : n.parents) {
        const std::size_t pc = nodes_[p].value.cols();
        if (Matrix* dp = target(p))
          for (std::size_t r = 0; r < dy.rows(); ++r)
            for (std::size_t c = 0; c < pc; ++c) (*dp)(r, c) += dy(r, offset + c);
        offset += pc;
      }
      return;
    }
    case Op::Softmax: {
      Matrix* da = target(n.parents[0]);
      if (!da) return;
      const bool down = n.axis == Axis::Rows;
      const std::size_t len = down ? y.rows() : y.cols();
      const std::size_t count = down ? y.cols() : y.rows();
      for (std::size_t line = 0; line < count; ++line) {
        double dot = 0.0;
        for (std::size_t i = 0; i < len; ++i) {
          const std::size_t r = down ? i : line, c = down ? line : i;
          dot += dy(r, c) * y(r, c);
        }
        for (std::size_t i = 0; i < len; ++i) {
          const std::size_t r = down ? i : line, c = down ? line : i;
          (*da)(r, c) += y(r, c) * (dy(r, c) - dot);
        }
      }
      return;
    }
    case Op::Sigmoid:
      if (Matrix* da = target(n.parents[0]))
        for (std::size_t i = 0; i < dy.size(); ++i) (*da)[i] += dy[i] * y[i] * (1.0 - y[i]);
      return;
    case Op::Tanh:
      if (Matrix* da = target(n.parents[0]))
        for (std::size_t i = 0; i < dy.size(); ++i) (*da)[i] += dy[i] * (1.0 - y[i] * y[i]);
      return;
    case Op::LeakyRelu:
      if (Matrix* da = target(n.parents[0])) {
        const Matrix& x = in(0);
        // slope 1 at exactly zero
        for (std::size_t i = 0; i < dy.size(); ++i)
          (*da)[i] += dy[i] * (x[i] >= 0.0 ? 1.0 : n.scalar);
      }
      return;
    case Op::Exp:
      if (Matrix* da = target(n.parents[0]))
        for (std::size_t i = 0; i < dy.size(); ++i) (*da)[i] += dy[i] * y[i];
      return;
    case Op::Log:
      if (Matrix* da = target(n.parents[0])) {
        const Matrix& x = in(0);
        for (std::size_t i = 0; i < dy.size(); ++i) (*da)[i] += dy[i] / x[i];
      }
      return;
    case Op::Mean:
      if (Matrix* da = target(n.parents[0])) {
        const bool down = n.axis == Axis::Rows;
        const double inv = 1.0 / static_cast<double>(down ? da->rows() : da->cols());
        for (std::size_t r = 0; r < da->rows(); ++r)
          for (std::size_t c = 0; c < da->cols(); ++c)
            (*da)(r, c) += inv * (down ? dy(0, c) : dy(r, 0));
      }
      return;
    case Op::Sum:
      if (Matrix* da = target(n.parents[0]))
        for (std::size_t i = 0; i < da->size(); ++i) (*da)[i] += dy[0];
      return;
    case Op::Scale:
    case Op::GradReverse: {
      const double factor = n.op == Op::Scale ? n.scalar : -n.scalar;
      if (Matrix* da = target(n.parents[0]))
        for (std::size_t i = 0; i < dy.size(); ++i) (*da)[i] += factor * dy[i];
      return;
    }
    case Op::GatherRows:
      if (Matrix* da = target(n.parents[0]))
        for (std::size_t i = 0; i < n.indices.size(); ++i)
          for (std::size_t c = 0; c < dy.cols(); ++c) (*da)(n.indices[i], c) += dy(i, c);
      return;
    case Op::GatherCols:
      if (Matrix* da = target(n.parents[0]))
        for (std::size_t j = 0; j < n.indices.size(); ++j)
          for (std::size_t r = 0; r < dy.rows(); ++r) (*da)(r, n.indices[j]) += dy(r, j);
      return;
  }
}

}  // namespace ltsgat::ad
