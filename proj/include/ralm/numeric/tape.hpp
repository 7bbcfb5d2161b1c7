// Copyright 2026 The RALM Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <unordered_map>

#include "ralm/numeric/dense.hpp"

namespace ralm::nn {

/// A trainable matrix together with its gradient accumulator and Adam state.
struct Parameter {
  DenseMatrix value;
  DenseMatrix gradient;
  DenseMatrix adam_m;
  DenseMatrix adam_v;
  std::int64_t step_count = 0;

  Parameter() = default;
  explicit Parameter(DenseMatrix init);

  void zero_grad() { gradient.setZero(); }
  Eigen::Index rows() const { return value.rows(); }
  Eigen::Index cols() const { return value.cols(); }
};

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; only valid while the
/// owning tape is alive.
class Var {
 public:
  Var() = default;

  const DenseMatrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  /// Value of a 1x1 node.
  double scalar() const;

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Define-by-run reverse-mode tape. Build a fresh tape per forward pass, call
/// backward() once on a scalar loss, and gradients land in the bound
/// Parameter::gradient matrices (accumulated, never overwritten).
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const DenseMatrix&)>;

  /// With `record_gradients == false` parameters are bound read-only and no
  /// backward closures are kept; use it for inference.
  explicit Tape(bool record_gradients = true) : record_(record_gradients) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(DenseMatrix value);
  /// Binds a parameter. Binding the same parameter twice returns the same node.
  Var param(Parameter& p);
  /// Read-only binding, allowed only on non-recording tapes.
  Var param(const Parameter& p);

  void backward(const Var& loss);

  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

  // Op-implementation interface.
  Var push(DenseMatrix value, bool requires_grad, BackwardFn fn);
  const DenseMatrix& value(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  /// Gradient buffer of a node, zero-initialized on first access.
  DenseMatrix& grad(std::size_t id);

 private:
  struct Node {
    DenseMatrix value;
    const DenseMatrix* external = nullptr;
    DenseMatrix grad;
    bool requires_grad = false;
    BackwardFn backward;
    Parameter* param = nullptr;
  };

  std::deque<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> bound_;
  bool record_;
  bool backward_done_ = false;
};

// Differentiable operations. All operands must live on the same tape.

Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
/// Adds the 1 x c row `row` to every row of `x`.
Var add_rowwise(const Var& x, const Var& row);
Var scale(const Var& a, double factor);
Var transpose(const Var& a);
Var activation(const Var& x, Activation kind);
inline Var tanh(const Var& x) { return activation(x, Activation::kTanh); }
inline Var relu(const Var& x) { return activation(x, Activation::kRelu); }
inline Var sigmoid(const Var& x) { return activation(x, Activation::kSigmoid); }
/// Softmax over all coefficients; keeps the input shape.
Var softmax(const Var& v);
/// Softmax of every row separately.
Var softmax_rows(const Var& x);
/// Row-wise inner products of two equally shaped matrices, as rows x 1.
Var row_dot(const Var& a, const Var& b);
/// Stacks same-width matrices on top of each other.
Var vstack(std::span<const Var> parts);
/// Places same-height matrices side by side.
Var hconcat(std::span<const Var> parts);
Var gather_rows(const Var& table, std::span<const int> rows);
/// Mean of the selected rows (1 x cols). An empty selection yields zeros.
Var gather_mean(const Var& table, std::span<const int> rows);
/// One gather_mean per bag, stacked (bags x cols).
Var embedding_bag(const Var& table, std::span<const std::vector<int>> bags);
/// Column j as rows x 1.
Var column(const Var& x, Eigen::Index j);
/// Row i of `x` times factors(i, 0).
Var scale_rows(const Var& x, const Var& factors);
Var sum(std::span<const Var> terms);
/// Inner product of two equally sized matrices, as 1x1.
Var dot(const Var& a, const Var& b);
/// -log softmax(logits)[target], with logits flattened.
Var softmax_cross_entropy(const Var& logits, Eigen::Index target);
/// Mean softmax cross entropy over consecutive groups of a logit column;
/// group g spans [offsets[g], offsets[g+1]) and its target is the first entry.
Var grouped_softmax_cross_entropy(const Var& logits, std::span<const Eigen::Index> offsets);
/// Binary cross entropy of sigmoid(logit) against label in {0, 1}.
Var sigmoid_bce_with_logits(const Var& logit, double label);
/// Mean binary cross entropy over a column of logits.
Var mean_sigmoid_bce_with_logits(const Var& logits, std::span<const double> labels);

inline Var operator*(const Var& a, const Var& b) { return matmul(a, b); }
inline Var operator+(const Var& a, const Var& b) { return add(a, b); }

}  // namespace ralm::nn
