/* Copyright 2026 The latentstory Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#pragma once

// Reverse-mode differentiation over dense row-major Eigen matrices.
//
// A Graph records every node created during a forward pass. Rows are
// sequence positions and columns are features throughout the library.
// Calling backward() walks the tape in reverse and accumulates into the
// grad buffers of the Parameters that were read.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace latentstory {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

/// A trainable array and its accumulated gradient.
template <typename Scalar>
struct Parameter {
  std::string name;
  Matrix<Scalar> value;
  Matrix<Scalar> grad;

  Parameter() = default;
  Parameter(std::string n, Matrix<Scalar> v)
      : name(std::move(n)), value(std::move(v)), grad(Matrix<Scalar>::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

/// Flat, ordered view over every parameter of a model.
template <typename Scalar>
using ParameterList = std::vector<Parameter<Scalar>*>;

template <typename Scalar>
class Graph;

/// Handle to a node in a Graph.
template <typename Scalar>
class Var {
 public:
  Var() = default;
  Var(Graph<Scalar>* graph, std::size_t id) : graph_(graph), id_(id) {}

  const Matrix<Scalar>& value() const { return graph_->node(id_).value; }
  const Matrix<Scalar>& grad() const { return graph_->node(id_).grad; }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  Scalar scalar() const { return value()(0, 0); }

  Graph<Scalar>& graph() const { return *graph_; }
  std::size_t id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }
  bool requires_grad() const { return graph_->node(id_).requires_grad; }

 private:
  Graph<Scalar>* graph_ = nullptr;
  std::size_t id_ = 0;
};

template <typename Scalar>
class Graph {
 public:
  using Backprop = std::function<void(const Matrix<Scalar>&)>;

  struct Node {
    Matrix<Scalar> value;
    Matrix<Scalar> grad;
    Backprop backprop;
    bool requires_grad = false;
  };

  /// With record == false no backward closures are kept (inference mode).
  explicit Graph(bool record = true) : record_(record) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool recording() const { return record_; }

  Var<Scalar> constant(Matrix<Scalar> value) { return push(std::move(value), false, nullptr); }

  Var<Scalar> parameter(Parameter<Scalar>& p) {
    Parameter<Scalar>* target = &p;
    return push(p.value, record_, [target](const Matrix<Scalar>& g) {
      if (target->grad.rows() != g.rows() || target->grad.cols() != g.cols()) target->zero_grad();
      target->grad += g;
    });
  }

  /// Creates a node whose gradient callback runs only when some input needs it.
  Var<Scalar> make(Matrix<Scalar> value, std::initializer_list<Var<Scalar>> inputs, Backprop backprop) {
    bool needs = false;
    if (record_) {
      for (const auto& in : inputs) needs = needs || in.requires_grad();
    }
    return push(std::move(value), needs, needs ? std::move(backprop) : Backprop{});
  }

  Var<Scalar> make(Matrix<Scalar> value, const std::vector<Var<Scalar>>& inputs, Backprop backprop) {
    bool needs = false;
    if (record_) {
      for (const auto& in : inputs) needs = needs || in.requires_grad();
    }
    return push(std::move(value), needs, needs ? std::move(backprop) : Backprop{});
  }

  /// Adds g into the gradient buffer of v.
  void accumulate(const Var<Scalar>& v, const Matrix<Scalar>& g) {
    Node& n = nodes_[v.id()];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }

  template <typename Fn>
  void accumulate_with(const Var<Scalar>& v, Fn&& fn) {
    Node& n = nodes_[v.id()];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) n.grad = Matrix<Scalar>::Zero(n.value.rows(), n.value.cols());
    fn(n.grad);
  }

  /// Reverse sweep from a 1x1 node.
  void backward(const Var<Scalar>& loss, Scalar seed = Scalar(1)) {
    if (!record_) throw std::logic_error("backward on a non-recording graph");
    if (loss.rows() != 1 || loss.cols() != 1) throw std::invalid_argument("backward expects a scalar node");
    Node& root = nodes_[loss.id()];
    if (!root.requires_grad) return;
    root.grad = Matrix<Scalar>::Constant(1, 1, seed);
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.requires_grad || n.grad.size() == 0 || !n.backprop) continue;
      n.backprop(n.grad);
    }
  }

  const Node& node(std::size_t id) const { return nodes_[id]; }
  std::size_t size() const { return nodes_.size(); }

 private:
  Var<Scalar> push(Matrix<Scalar> value, bool requires_grad, Backprop backprop) {
    nodes_.push_back(Node{std::move(value), Matrix<Scalar>(), std::move(backprop), requires_grad});
    return Var<Scalar>(this, nodes_.size() - 1);
  }

  bool record_;
  std::deque<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Elementwise and linear ops.

template <typename Scalar>
Var<Scalar> matmul(const Var<Scalar>& a, const Var<Scalar>& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimension mismatch");
  Graph<Scalar>& g = a.graph();
  Matrix<Scalar> out = a.value() * b.value();
  return g.make(std::move(out), {a, b}, [&g, a, b](const Matrix<Scalar>& d) {
    g.accumulate_with(a, [&](Matrix<Scalar>& ga) { ga.noalias() += d * b.value().transpose(); });
    g.accumulate_with(b, [&](Matrix<Scalar>& gb) { gb.noalias() += a.value().transpose() * d; });
  });
}

/// a * b^T
template <typename Scalar>
Var<Scalar> matmul_nt(const Var<Scalar>& a, const Var<Scalar>& b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("matmul_nt: inner dimension mismatch");
  Graph<Scalar>& g = a.graph();
  Matrix<Scalar> out = a.value() * b.value().transpose();
  return g.make(std::move(out), {a, b}, [&g, a, b](const Matrix<Scalar>& d) {
    g.accumulate_with(a, [&](Matrix<Scalar>& ga) { ga.noalias() += d * b.value(); });
    g.accumulate_with(b, [&](Matrix<Scalar>& gb) { gb.noalias() += d.transpose() * a.value(); });
  });
}

template <typename Scalar>
Var<Scalar> operator+(const Var<Scalar>& a, const Var<Scalar>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("add: shape mismatch");
  Graph<Scalar>& g = a.graph();
  return g.make(a.value() + b.value(), {a, b}, [&g, a, b](const Matrix<Scalar>& d) {
    g.accumulate(a, d);
    g.accumulate(b, d);
  });
}

template <typename Scalar>
Var<Scalar> operator-(const Var<Scalar>& a, const Var<Scalar>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("sub: shape mismatch");
  Graph<Scalar>& g = a.graph();
  return g.make(a.value() - b.value(), {a, b}, [&g, a, b](const Matrix<Scalar>& d) {
    g.accumulate(a, d);
    g.accumulate(b, -d);
  });
}

template <typename Scalar>
Var<Scalar> scale(const Var<Scalar>& a, Scalar s) {
  Graph<Scalar>& g = a.graph();
  return g.make(a.value() * s, {a}, [&g, a, s](const Matrix<Scalar>& d) { g.accumulate(a, d * s); });
}

/// Adds a fixed (non-differentiable) matrix, e.g. Gumbel noise or an attention mask.
template <typename Scalar>
Var<Scalar> add_constant(const Var<Scalar>& a, const Matrix<Scalar>& c) {
  if (a.rows() != c.rows() || a.cols() != c.cols()) throw std::invalid_argument("add_constant: shape mismatch");
  Graph<Scalar>& g = a.graph();
  return g.make(a.value() + c, {a}, [&g, a](const Matrix<Scalar>& d) { g.accumulate(a, d); });
}

/// Elementwise product with a fixed matrix (dropout masks).
template <typename Scalar>
Var<Scalar> mul_constant(const Var<Scalar>& a, Matrix<Scalar> c) {
  if (a.rows() != c.rows() || a.cols() != c.cols()) throw std::invalid_argument("mul_constant: shape mismatch");
  Graph<Scalar>& g = a.graph();
  Matrix<Scalar> out = a.value().cwiseProduct(c);
  return g.make(std::move(out), {a}, [&g, a, c = std::move(c)](const Matrix<Scalar>& d) {
    g.accumulate(a, d.cwiseProduct(c));
  });
}

/// a + row, broadcasting a 1 x n row over every row of a.
template <typename Scalar>
Var<Scalar> add_row(const Var<Scalar>& a, const Var<Scalar>& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) throw std::invalid_argument("add_row: shape mismatch");
  Graph<Scalar>& g = a.graph();
  Matrix<Scalar> out = a.value().rowwise() + row.value().row(0);
  return g.make(std::move(out), {a, row}, [&g, a, row](const Matrix<Scalar>& d) {
    g.accumulate(a, d);
    g.accumulate_with(row, [&](Matrix<Scalar>& gr) { gr += d.colwise().sum(); });
  });
}

template <typename Scalar>
Var<Scalar> relu(const Var<Scalar>& a) {
  Graph<Scalar>& g = a.graph();
  Matrix<Scalar> out = a.value().cwiseMax(Scalar(0));
  return g.make(std::move(out), {a}, [&g, a](const Matrix<Scalar>& d) {
    g.accumulate(a, (a.value().array() > Scalar(0)).select(d, Scalar(0)).matrix());
  });
}

/// Exact (erf) GELU.
template <typename Scalar>
Var<Scalar> gelu(const Var<Scalar>& a) {
  Graph<Scalar>& g = a.graph();
  const Scalar inv_sqrt2 = Scalar(0.70710678118654752440);
  Matrix<Scalar> out = a.value().unaryExpr([inv_sqrt2](Scalar x) {
    return Scalar(0.5) * x * (Scalar(1) + std::erf(x * inv_sqrt2));
  });
  return g.make(std::move(out), {a}, [&g, a, inv_sqrt2](const Matrix<Scalar>& d) {
    const Scalar inv_sqrt_2pi = Scalar(0.39894228040143267794);
    Matrix<Scalar> local = a.value().unaryExpr([=](Scalar x) {
      return Scalar(0.5) * (Scalar(1) + std::erf(x * inv_sqrt2)) + x * inv_sqrt_2pi * std::exp(Scalar(-0.5) * x * x);
    });
    g.accumulate(a, d.cwiseProduct(local));
  });
}

// ---------------------------------------------------------------------------
// Row-wise normalizations.

/// Softmax along each row. Entries equal to -inf in the input get weight 0.
template <typename Scalar>
Var<Scalar> softmax_rows(const Var<Scalar>& a) {
  Graph<Scalar>& g = a.graph();
  Matrix<Scalar> p(a.rows(), a.cols());
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    const Scalar m = a.value().row(r).maxCoeff();
    p.row(r) = (a.value().row(r).array() - m).exp().matrix();
    // Eigen's vectorized exp clamps -inf to a denormal; masked entries must be exactly 0.
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      if (a.value()(r, c) == -std::numeric_limits<Scalar>::infinity()) p(r, c) = Scalar(0);
    }
    p.row(r) /= p.row(r).sum();
  }
  const bool needs = g.recording() && a.requires_grad();
  Matrix<Scalar> saved = needs ? p : Matrix<Scalar>();
  return g.make(std::move(p), {a}, [&g, a, pv = std::move(saved)](const Matrix<Scalar>& d) {
    Matrix<Scalar> dot = d.cwiseProduct(pv).rowwise().sum();
    Matrix<Scalar> gx = pv.cwiseProduct(d - dot * RowVector<Scalar>::Ones(pv.cols()));
    g.accumulate(a, gx);
  });
}

/// LayerNorm over columns with a learned gain and bias (both 1 x n).
template <typename Scalar>
Var<Scalar> layer_norm(const Var<Scalar>& x, const Var<Scalar>& gamma, const Var<Scalar>& beta, Scalar eps = Scalar(1e-5)) {
  if (gamma.cols() != x.cols() || beta.cols() != x.cols()) throw std::invalid_argument("layer_norm: shape mismatch");
  Graph<Scalar>& g = x.graph();
  const Eigen::Index n = x.cols();
  Matrix<Scalar> xhat(x.rows(), n);
  Matrix<Scalar> inv_std(x.rows(), 1);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const Scalar mean = x.value().row(r).mean();
    const Scalar var = (x.value().row(r).array() - mean).square().mean();
    inv_std(r, 0) = Scalar(1) / std::sqrt(var + eps);
    xhat.row(r) = (x.value().row(r).array() - mean).matrix() * inv_std(r, 0);
  }
  Matrix<Scalar> out = (xhat.array().rowwise() * gamma.value().row(0).array()).rowwise() + beta.value().row(0).array();
  return g.make(std::move(out), {x, gamma, beta},
                [&g, x, gamma, beta, xhat = std::move(xhat), inv_std = std::move(inv_std), n](const Matrix<Scalar>& d) {
                  g.accumulate_with(gamma, [&](Matrix<Scalar>& gg) { gg += d.cwiseProduct(xhat).colwise().sum(); });
                  g.accumulate_with(beta, [&](Matrix<Scalar>& gb) { gb += d.colwise().sum(); });
                  if (!x.requires_grad()) return;
                  Matrix<Scalar> dxhat = d.array().rowwise() * gamma.value().row(0).array();
                  Matrix<Scalar> gx(d.rows(), n);
                  for (Eigen::Index r = 0; r < d.rows(); ++r) {
                    const Scalar m1 = dxhat.row(r).mean();
                    const Scalar m2 = dxhat.row(r).dot(xhat.row(r)) / Scalar(n);
                    gx.row(r) = inv_std(r, 0) * (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2).matrix();
                  }
                  g.accumulate(x, gx);
                });
}

// ---------------------------------------------------------------------------
// Reductions and losses.

/// Column means: n x k -> 1 x k.
template <typename Scalar>
Var<Scalar> mean_rows(const Var<Scalar>& a) {
  Graph<Scalar>& g = a.graph();
  const Eigen::Index n = a.rows();
  Matrix<Scalar> out = a.value().colwise().mean();
  return g.make(std::move(out), {a}, [&g, a, n](const Matrix<Scalar>& d) {
    g.accumulate_with(a, [&](Matrix<Scalar>& ga) { ga.rowwise() += d.row(0) / Scalar(n); });
  });
}

/// Shannon entropy (nats) of each row, summed: returns 1 x 1 for a single row.
template <typename Scalar>
Var<Scalar> entropy(const Var<Scalar>& p) {
  Graph<Scalar>& g = p.graph();
  Scalar h = 0;
  for (Eigen::Index i = 0; i < p.value().size(); ++i) {
    const Scalar v = p.value().data()[i];
    if (v > Scalar(0)) h -= v * std::log(v);
  }
  return g.make(Matrix<Scalar>::Constant(1, 1, h), {p}, [&g, p](const Matrix<Scalar>& d) {
    Matrix<Scalar> gp = p.value().unaryExpr([](Scalar v) {
      return v > Scalar(0) ? -(std::log(v) + Scalar(1)) : Scalar(0);
    });
    g.accumulate(p, gp * d(0, 0));
  });
}

/// Weighted mean token cross-entropy (nats) of integer targets under row logits.
/// Rows with weight 0 are ignored; the mean is over the total weight.
template <typename Scalar>
Var<Scalar> cross_entropy(const Var<Scalar>& logits, const std::vector<int>& targets, const std::vector<Scalar>& weights) {
  const Eigen::Index n = logits.rows();
  if (static_cast<Eigen::Index>(targets.size()) != n || static_cast<Eigen::Index>(weights.size()) != n) {
    throw std::invalid_argument("cross_entropy: target/weight count must equal the number of rows");
  }
  Scalar total_w = 0;
  for (Scalar w : weights) total_w += w;
  if (!(total_w > Scalar(0))) throw std::invalid_argument("cross_entropy: no positions with positive weight");
  Graph<Scalar>& g = logits.graph();
  Matrix<Scalar> probs(n, logits.cols());
  Scalar loss = 0;
  for (Eigen::Index r = 0; r < n; ++r) {
    const int t = targets[r];
    if (weights[r] == Scalar(0)) {
      probs.row(r).setZero();
      continue;
    }
    if (t < 0 || t >= logits.cols()) throw std::out_of_range("cross_entropy: target id out of range");
    const Scalar m = logits.value().row(r).maxCoeff();
    probs.row(r) = (logits.value().row(r).array() - m).exp().matrix();
    const Scalar z = probs.row(r).sum();
    probs.row(r) /= z;
    loss += weights[r] * (m + std::log(z) - logits.value()(r, t));
  }
  loss /= total_w;
  return g.make(Matrix<Scalar>::Constant(1, 1, loss), {logits},
                [&g, logits, targets, weights, total_w, probs = std::move(probs)](const Matrix<Scalar>& d) {
                  Matrix<Scalar> gl = probs;
                  for (Eigen::Index r = 0; r < gl.rows(); ++r) {
                    if (weights[r] == Scalar(0)) continue;
                    gl(r, targets[r]) -= Scalar(1);
                    gl.row(r) *= weights[r] * d(0, 0) / total_w;
                  }
                  g.accumulate(logits, gl);
                });
}

// ---------------------------------------------------------------------------
// Indexing and reshaping.

/// Embedding lookup: out row i = table row ids[i].
template <typename Scalar>
Var<Scalar> gather_rows(const Var<Scalar>& table, const std::vector<int>& ids) {
  Graph<Scalar>& g = table.graph();
  Matrix<Scalar> out(static_cast<Eigen::Index>(ids.size()), table.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= table.rows()) throw std::out_of_range("gather_rows: id out of range");
    out.row(static_cast<Eigen::Index>(i)) = table.value().row(ids[i]);
  }
  return g.make(std::move(out), {table}, [&g, table, ids](const Matrix<Scalar>& d) {
    g.accumulate_with(table, [&](Matrix<Scalar>& gt) {
      for (std::size_t i = 0; i < ids.size(); ++i) gt.row(ids[i]) += d.row(static_cast<Eigen::Index>(i));
    });
  });
}

template <typename Scalar>
Var<Scalar> slice_rows(const Var<Scalar>& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) throw std::out_of_range("slice_rows: range out of bounds");
  Graph<Scalar>& g = a.graph();
  Matrix<Scalar> out = a.value().middleRows(start, count);
  return g.make(std::move(out), {a}, [&g, a, start, count](const Matrix<Scalar>& d) {
    g.accumulate_with(a, [&](Matrix<Scalar>& ga) { ga.middleRows(start, count) += d; });
  });
}

template <typename Scalar>
Var<Scalar> slice_cols(const Var<Scalar>& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) throw std::out_of_range("slice_cols: range out of bounds");
  Graph<Scalar>& g = a.graph();
  Matrix<Scalar> out = a.value().middleCols(start, count);
  return g.make(std::move(out), {a}, [&g, a, start, count](const Matrix<Scalar>& d) {
    g.accumulate_with(a, [&](Matrix<Scalar>& ga) { ga.middleCols(start, count) += d; });
  });
}

template <typename Scalar>
Var<Scalar> concat_cols(const std::vector<Var<Scalar>>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  Graph<Scalar>& g = parts.front().graph();
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != parts.front().rows()) throw std::invalid_argument("concat_cols: row mismatch");
    cols += p.cols();
  }
  Matrix<Scalar> out(parts.front().rows(), cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  return g.make(std::move(out), parts, [&g, parts](const Matrix<Scalar>& d) {
    Eigen::Index off = 0;
    for (const auto& p : parts) {
      g.accumulate(p, d.middleCols(off, p.cols()));
      off += p.cols();
    }
  });
}

/// Rows of the strided sliding window used by a 1D convolution:
/// output row i concatenates input rows stride*i - pad + k for k in [0, kernel),
/// with zeros outside [0, n).
template <typename Scalar>
Var<Scalar> unfold(const Var<Scalar>& x, int kernel, int stride, int pad) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  const Eigen::Index span = n + 2 * pad - kernel;
  if (span < 0 || span % stride != 0) throw std::invalid_argument("unfold: length not compatible with kernel/stride");
  const Eigen::Index out_n = span / stride + 1;
  Graph<Scalar>& g = x.graph();
  Matrix<Scalar> out = Matrix<Scalar>::Zero(out_n, kernel * d);
  for (Eigen::Index i = 0; i < out_n; ++i) {
    for (int k = 0; k < kernel; ++k) {
      const Eigen::Index src = stride * i - pad + k;
      if (src >= 0 && src < n) out.block(i, k * d, 1, d) = x.value().row(src);
    }
  }
  return g.make(std::move(out), {x}, [&g, x, kernel, stride, pad, out_n, n, d](const Matrix<Scalar>& grad) {
    g.accumulate_with(x, [&](Matrix<Scalar>& gx) {
      for (Eigen::Index i = 0; i < out_n; ++i) {
        for (int k = 0; k < kernel; ++k) {
          const Eigen::Index src = stride * i - pad + k;
          if (src >= 0 && src < n) gx.row(src) += grad.block(i, k * d, 1, d);
        }
      }
    });
  });
}

/// Adjoint of unfold: overlap-adds row blocks back onto the output grid.
/// Input row i, block k lands on output row stride*i - pad + k.
template <typename Scalar>
Var<Scalar> fold(const Var<Scalar>& cols, int kernel, int stride, int pad, Eigen::Index out_n) {
  if (cols.cols() % kernel != 0) throw std::invalid_argument("fold: columns not divisible by kernel");
  const Eigen::Index d = cols.cols() / kernel;
  const Eigen::Index in_n = cols.rows();
  Graph<Scalar>& g = cols.graph();
  Matrix<Scalar> out = Matrix<Scalar>::Zero(out_n, d);
  for (Eigen::Index i = 0; i < in_n; ++i) {
    for (int k = 0; k < kernel; ++k) {
      const Eigen::Index dst = stride * i - pad + k;
      if (dst >= 0 && dst < out_n) out.row(dst) += cols.value().block(i, k * d, 1, d);
    }
  }
  return g.make(std::move(out), {cols}, [&g, cols, kernel, stride, pad, out_n, in_n, d](const Matrix<Scalar>& grad) {
    g.accumulate_with(cols, [&](Matrix<Scalar>& gc) {
      for (Eigen::Index i = 0; i < in_n; ++i) {
        for (int k = 0; k < kernel; ++k) {
          const Eigen::Index dst = stride * i - pad + k;
          if (dst >= 0 && dst < out_n) gc.block(i, k * d, 1, d) += grad.row(dst);
        }
      }
    });
  });
}

/// Mean of rows [s, e] (inclusive) for each span.
template <typename Scalar>
Var<Scalar> pool_spans(const Var<Scalar>& h, const std::vector<std::pair<int, int>>& spans) {
  Graph<Scalar>& g = h.graph();
  Matrix<Scalar> out(static_cast<Eigen::Index>(spans.size()), h.cols());
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const auto [s, e] = spans[i];
    if (s < 0 || e < s || e >= h.rows()) throw std::out_of_range("pool_spans: span outside sequence");
    out.row(static_cast<Eigen::Index>(i)) = h.value().middleRows(s, e - s + 1).colwise().mean();
  }
  return g.make(std::move(out), {h}, [&g, h, spans](const Matrix<Scalar>& d) {
    g.accumulate_with(h, [&](Matrix<Scalar>& gh) {
      for (std::size_t i = 0; i < spans.size(); ++i) {
        const auto [s, e] = spans[i];
        const Scalar w = Scalar(1) / Scalar(e - s + 1);
        gh.middleRows(s, e - s + 1).rowwise() += d.row(static_cast<Eigen::Index>(i)) * w;
      }
    });
  });
}

/// Bi-affine scores: out(i, r) = left_i^T W_r right_i + b_r, where W is stored
/// as d x (R*d) with W_r occupying columns [r*d, (r+1)*d).
template <typename Scalar>
Var<Scalar> biaffine(const Var<Scalar>& left, const Var<Scalar>& right, const Var<Scalar>& weight, const Var<Scalar>& bias) {
  const Eigen::Index d = left.cols();
  const Eigen::Index labels = bias.cols();
  if (right.cols() != d || left.rows() != right.rows() || weight.rows() != d || weight.cols() != labels * d) {
    throw std::invalid_argument("biaffine: shape mismatch");
  }
  Graph<Scalar>& g = left.graph();
  const Eigen::Index n = left.rows();
  Matrix<Scalar> lw = left.value() * weight.value();  // n x (R*d)
  Matrix<Scalar> out(n, labels);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index r = 0; r < labels; ++r) {
      out(i, r) = lw.row(i).segment(r * d, d).dot(right.value().row(i)) + bias.value()(0, r);
    }
  }
  return g.make(std::move(out), {left, right, weight, bias},
                [&g, left, right, weight, bias, d, labels, n, lw = std::move(lw)](const Matrix<Scalar>& grad) {
                  g.accumulate_with(bias, [&](Matrix<Scalar>& gb) { gb += grad.colwise().sum(); });
                  // d/d(lw) block r of row i = grad(i, r) * right_i
                  Matrix<Scalar> dlw(n, labels * d);
                  for (Eigen::Index i = 0; i < n; ++i) {
                    for (Eigen::Index r = 0; r < labels; ++r) dlw.row(i).segment(r * d, d) = grad(i, r) * right.value().row(i);
                  }
                  g.accumulate_with(left, [&](Matrix<Scalar>& gl) { gl.noalias() += dlw * weight.value().transpose(); });
                  g.accumulate_with(weight, [&](Matrix<Scalar>& gw) { gw.noalias() += left.value().transpose() * dlw; });
                  g.accumulate_with(right, [&](Matrix<Scalar>& gr) {
                    for (Eigen::Index i = 0; i < n; ++i) {
                      for (Eigen::Index r = 0; r < labels; ++r) gr.row(i) += grad(i, r) * lw.row(i).segment(r * d, d);
                    }
                  });
                });
}

}  // namespace latentstory
