// Copyright (c) 2026 The causalflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode differentiation over a small, closed set of dense 2-D
// primitives. Values are double precision throughout.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "causalflow/errors.hpp"

namespace causalflow::diff {

using Tensor2 = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

enum class Op {
  Leaf,
  MatMul,
  Add,        // second operand may be a 1 x n row broadcast over the rows of the first
  Unary,      // tanh / sigmoid / softplus
  Concat,
  Slice,
  Scale,
  SumSquares,
  Hadamard,
};

enum class Unary { Tanh, Sigmoid, Softplus };

/// Handle to a recorded value.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
};

inline double softplus(double x) noexcept { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
inline double sigmoid(double x) noexcept {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Elementwise tanh through the vectorised exponential. Saturates cleanly:
/// exp overflow gives 1, underflow gives -1.
template <class Derived>
inline auto tanh_array(const Eigen::ArrayBase<Derived>& x) {
  return 1.0 - 2.0 / ((2.0 * x).exp() + 1.0);
}

/// Elementwise logistic through the vectorised exponential.
template <class Derived>
inline auto sigmoid_array(const Eigen::ArrayBase<Derived>& x) {
  return 1.0 / (1.0 + (-x).exp());
}

inline void check_finite(const Tensor2& m, const char* where) {
  if (!m.allFinite()) fail(ErrorCode::NonFiniteValue, std::string("non-finite value produced by ") + where);
}

class Tape;

/// Gradients of a scalar loss with respect to every leaf that requires them.
class Gradients {
 public:
  [[nodiscard]] bool has(Var v) const { return v.id < grads_.size() && grads_[v.id].size() > 0; }
  [[nodiscard]] const Tensor2& of(Var v) const {
    require(has(v), ErrorCode::IndexOutOfRange, "no gradient recorded for this variable");
    return grads_[v.id];
  }

 private:
  friend class Tape;
  std::vector<Tensor2> grads_;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  /// Records an input. Parameters use requires_grad = true.
  Var leaf(Tensor2 value, bool requires_grad = false) {
    check_finite(value, "leaf");
    Node n;
    n.op = Op::Leaf;
    n.requires_grad = requires_grad;
    n.value = std::move(value);
    return push(std::move(n));
  }

  Var matmul(Var a, Var b) {
    const auto& A = value(a);
    const auto& B = value(b);
    require(A.cols() == B.rows(), ErrorCode::ShapeMismatch,
            "matmul " + shape(A) + " x " + shape(B));
    return record(Op::MatMul, {a, b}, A * B, "matmul");
  }

  Var add(Var a, Var b) {
    const auto& A = value(a);
    const auto& B = value(b);
    if (A.rows() == B.rows() && A.cols() == B.cols()) return record(Op::Add, {a, b}, A + B, "add");
    require(B.rows() == 1 && B.cols() == A.cols(), ErrorCode::ShapeMismatch,
            "add " + shape(A) + " + " + shape(B));
    Tensor2 out = A.rowwise() + B.row(0);
    return record(Op::Add, {a, b}, std::move(out), "add");
  }

  Var unary(Unary kind, Var a) {
    const auto& A = value(a);
    Tensor2 out(A.rows(), A.cols());
    switch (kind) {
      case Unary::Tanh: out = tanh_array(A.array()); break;
      case Unary::Sigmoid: out = sigmoid_array(A.array()); break;
      case Unary::Softplus: out = A.unaryExpr([](double x) { return diff::softplus(x); }); break;
    }
    auto v = record(Op::Unary, {a}, std::move(out), "unary");
    nodes_[v.id].unary = kind;
    return v;
  }
  Var tanh(Var a) { return unary(Unary::Tanh, a); }
  Var sigmoid(Var a) { return unary(Unary::Sigmoid, a); }
  Var softplus(Var a) { return unary(Unary::Softplus, a); }

  /// Concatenation along rows (axis 0) or columns (axis 1).
  Var concat(std::span<const Var> parts, int axis) {
    require(!parts.empty(), ErrorCode::ShapeMismatch, "concat of nothing");
    require(axis == 0 || axis == 1, ErrorCode::ShapeMismatch, "axis must be 0 or 1");
    const auto& first = value(parts[0]);
    Eigen::Index rows = axis == 1 ? first.rows() : 0;
    Eigen::Index cols = axis == 0 ? first.cols() : 0;
    for (auto p : parts) {
      const auto& P = value(p);
      if (axis == 1) {
        require(P.rows() == rows, ErrorCode::ShapeMismatch, "concat row counts differ");
        cols += P.cols();
      } else {
        require(P.cols() == cols, ErrorCode::ShapeMismatch, "concat column counts differ");
        rows += P.rows();
      }
    }
    Tensor2 out(rows, cols);
    Eigen::Index off = 0;
    for (auto p : parts) {
      const auto& P = value(p);
      if (axis == 1) {
        out.middleCols(off, P.cols()) = P;
        off += P.cols();
      } else {
        out.middleRows(off, P.rows()) = P;
        off += P.rows();
      }
    }
    Node n;
    n.op = Op::Concat;
    n.axis = axis;
    for (auto p : parts) n.inputs.push_back(p.id);
    n.value = std::move(out);
    return finish(std::move(n), "concat");
  }
  Var concat_cols(std::initializer_list<Var> parts) { return concat({parts.begin(), parts.size()}, 1); }

  Var slice(Var a, int axis, Eigen::Index begin, Eigen::Index count) {
    const auto& A = value(a);
    const auto extent = axis == 0 ? A.rows() : A.cols();
    require(begin >= 0 && count >= 0 && begin + count <= extent, ErrorCode::ShapeMismatch,
            "slice out of range on " + shape(A));
    Tensor2 out = axis == 0 ? Tensor2(A.middleRows(begin, count)) : Tensor2(A.middleCols(begin, count));
    auto v = record(Op::Slice, {a}, std::move(out), "slice");
    nodes_[v.id].axis = axis;
    nodes_[v.id].begin = begin;
    return v;
  }

  Var scale(Var a, double c) {
    auto v = record(Op::Scale, {a}, value(a) * c, "scale");
    nodes_[v.id].scalar = c;
    return v;
  }

  /// 1 x 1 sum of squared entries.
  Var sum_squares(Var a) {
    Tensor2 out(1, 1);
    out(0, 0) = value(a).squaredNorm();
    return record(Op::SumSquares, {a}, std::move(out), "sum_squares");
  }

  Var hadamard(Var a, Var b) {
    const auto& A = value(a);
    const auto& B = value(b);
    require(A.rows() == B.rows() && A.cols() == B.cols(), ErrorCode::ShapeMismatch,
            "hadamard " + shape(A) + " * " + shape(B));
    return record(Op::Hadamard, {a, b}, A.cwiseProduct(B), "hadamard");
  }

  [[nodiscard]] const Tensor2& value(Var v) const {
    require(v.id < nodes_.size(), ErrorCode::IndexOutOfRange, "variable not on this tape");
    return nodes_[v.id].value;
  }

  [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }

  /// Replays the tape backward from a 1 x 1 loss. The tape itself is not
  /// modified, so repeated calls give identical results.
  [[nodiscard]] Gradients backward(Var loss) const {
    const auto& L = value(loss);
    require(L.rows() == 1 && L.cols() == 1, ErrorCode::NonScalarLoss, "loss has shape " + shape(L));
    Gradients out;
    out.grads_.resize(nodes_.size());
    std::vector<Tensor2>& g = out.grads_;
    g[loss.id] = Tensor2::Ones(1, 1);
    for (std::size_t id = loss.id + 1; id-- > 0;) {
      const Node& n = nodes_[id];
      if (g[id].size() == 0 || n.op == Op::Leaf || !n.requires_grad) continue;
      const Tensor2& G = g[id];
      switch (n.op) {
        case Op::MatMul: {
          const auto& A = nodes_[n.inputs[0]].value;
          const auto& B = nodes_[n.inputs[1]].value;
          accumulate(g, n.inputs[0], [&] { return Tensor2(G * B.transpose()); });
          accumulate(g, n.inputs[1], [&] { return Tensor2(A.transpose() * G); });
          break;
        }
        case Op::Add: {
          accumulate(g, n.inputs[0], [&] { return G; });
          const auto& B = nodes_[n.inputs[1]].value;
          if (B.rows() == G.rows())
            accumulate(g, n.inputs[1], [&] { return G; });
          else
            accumulate(g, n.inputs[1], [&] { return Tensor2(G.colwise().sum()); });
          break;
        }
        case Op::Unary: {
          const auto& Y = n.value;
          accumulate(g, n.inputs[0], [&] {
            switch (n.unary) {
              case Unary::Tanh: return Tensor2(G.array() * (1.0 - Y.array().square()));
              case Unary::Sigmoid: return Tensor2(G.array() * Y.array() * (1.0 - Y.array()));
              case Unary::Softplus: {
                const auto& X = nodes_[n.inputs[0]].value;
                return Tensor2(G.array() * sigmoid_array(X.array()));
              }
            }
            return G;
          });
          break;
        }
        case Op::Concat: {
          Eigen::Index off = 0;
          for (auto in : n.inputs) {
            const auto& P = nodes_[in].value;
            if (n.axis == 1) {
              accumulate(g, in, [&] { return Tensor2(G.middleCols(off, P.cols())); });
              off += P.cols();
            } else {
              accumulate(g, in, [&] { return Tensor2(G.middleRows(off, P.rows())); });
              off += P.rows();
            }
          }
          break;
        }
        case Op::Slice: {
          const auto& A = nodes_[n.inputs[0]].value;
          accumulate(g, n.inputs[0], [&] {
            Tensor2 full = Tensor2::Zero(A.rows(), A.cols());
            if (n.axis == 0)
              full.middleRows(n.begin, G.rows()) = G;
            else
              full.middleCols(n.begin, G.cols()) = G;
            return full;
          });
          break;
        }
        case Op::Scale:
          accumulate(g, n.inputs[0], [&] { return Tensor2(G * n.scalar); });
          break;
        case Op::SumSquares: {
          const auto& A = nodes_[n.inputs[0]].value;
          accumulate(g, n.inputs[0], [&] { return Tensor2(A * (2.0 * G(0, 0))); });
          break;
        }
        case Op::Hadamard: {
          const auto& A = nodes_[n.inputs[0]].value;
          const auto& B = nodes_[n.inputs[1]].value;
          accumulate(g, n.inputs[0], [&] { return Tensor2(G.cwiseProduct(B)); });
          accumulate(g, n.inputs[1], [&] { return Tensor2(G.cwiseProduct(A)); });
          break;
        }
        case Op::Leaf: break;
      }
      // Interior gradients are not part of the result.
      g[id] = Tensor2();
    }
    return out;
  }

 private:
  struct Node {
    Op op = Op::Leaf;
    std::vector<std::size_t> inputs;
    Tensor2 value;
    bool requires_grad = false;
    Unary unary = Unary::Tanh;
    int axis = 0;
    Eigen::Index begin = 0;
    double scalar = 0.0;
  };

  static std::string shape(const Tensor2& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
  }

  Var push(Node n) {
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
  }

  Var record(Op op, std::initializer_list<Var> ins, Tensor2 value, const char* what) {
    Node n;
    n.op = op;
    for (auto v : ins) n.inputs.push_back(v.id);
    n.value = std::move(value);
    return finish(std::move(n), what);
  }

  Var finish(Node n, const char* what) {
    check_finite(n.value, what);
    for (auto in : n.inputs) n.requires_grad = n.requires_grad || nodes_[in].requires_grad;
    return push(std::move(n));
  }

  template <class F>
  void accumulate(std::vector<Tensor2>& g, std::size_t target, F&& make) const {
    if (!nodes_[target].requires_grad) return;
    if (g[target].size() == 0)
      g[target] = make();
    else
      g[target] += make();
  }

  std::vector<Node> nodes_;
};

}  // namespace causalflow::diff
