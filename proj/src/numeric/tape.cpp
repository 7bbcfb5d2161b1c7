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

#include "ralm/numeric/tape.hpp"

#include <cmath>
#include <string>

namespace ralm::nn {

Parameter::Parameter(DenseMatrix init)
    : value(std::move(init)),
      gradient(DenseMatrix::Zero(value.rows(), value.cols())),
      adam_m(DenseMatrix::Zero(value.rows(), value.cols())),
      adam_v(DenseMatrix::Zero(value.rows(), value.cols())) {}

const DenseMatrix& Var::value() const {
  if (tape_ == nullptr) throw ArgumentError("Var: unbound handle");
  return tape_->value(id_);
}

double Var::scalar() const {
  const DenseMatrix& v = value();
  if (v.size() != 1) throw DimensionError("Var::scalar: node is " + shape_string(v));
  return v(0, 0);
}

Var Tape::constant(DenseMatrix value) { return push(std::move(value), false, nullptr); }

Var Tape::param(Parameter& p) {
  if (auto it = bound_.find(&p); it != bound_.end()) return Var(this, it->second);
  Node node;
  node.external = &p.value;
  node.requires_grad = record_;
  node.param = record_ ? &p : nullptr;
  nodes_.push_back(std::move(node));
  const std::size_t id = nodes_.size() - 1;
  bound_.emplace(&p, id);
  return Var(this, id);
}

Var Tape::param(const Parameter& p) {
  if (record_) throw ArgumentError("Tape::param: const parameter on a recording tape");
  if (auto it = bound_.find(&p); it != bound_.end()) return Var(this, it->second);
  Node node;
  node.external = &p.value;
  nodes_.push_back(std::move(node));
  bound_.emplace(&p, nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

Var Tape::push(DenseMatrix value, bool requires_grad, BackwardFn fn) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = record_ && requires_grad;
  if (node.requires_grad) node.backward = std::move(fn);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

const DenseMatrix& Tape::value(std::size_t id) const {
  const Node& n = nodes_[id];
  return n.external != nullptr ? *n.external : n.value;
}

DenseMatrix& Tape::grad(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) {
    const DenseMatrix& v = value(id);
    n.grad = DenseMatrix::Zero(v.rows(), v.cols());
  }
  return n.grad;
}

void Tape::backward(const Var& loss) {
  if (loss.tape() != this) throw ArgumentError("Tape::backward: loss recorded on another tape");
  if (!record_) throw ArgumentError("Tape::backward: tape was not recording");
  if (backward_done_) throw ArgumentError("Tape::backward: already called on this tape");
  if (loss.value().size() != 1) {
    throw DimensionError("Tape::backward: loss must be 1x1, got " + shape_string(loss.value()));
  }
  backward_done_ = true;
  if (!nodes_[loss.id()].requires_grad) return;
  grad(loss.id()).setOnes();
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this, n.grad);
    if (n.param != nullptr) n.param->gradient += n.grad;
  }
}

namespace {

Tape& common_tape(const Var& a, const Var& b) {
  if (a.tape() == nullptr || a.tape() != b.tape()) {
    throw ArgumentError("operands recorded on different tapes");
  }
  return *a.tape();
}

Tape& tape_of(const Var& a) {
  if (a.tape() == nullptr) throw ArgumentError("unbound Var");
  return *a.tape();
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  Tape& t = common_tape(a, b);
  const std::size_t ia = a.id(), ib = b.id();
  DenseMatrix out = ralm::matmul(a.value(), b.value());
  const bool rg = t.requires_grad(ia) || t.requires_grad(ib);
  return t.push(std::move(out), rg, [ia, ib](Tape& tp, const DenseMatrix& g) {
    if (tp.requires_grad(ia)) tp.grad(ia).noalias() += g * tp.value(ib).transpose();
    if (tp.requires_grad(ib)) tp.grad(ib).noalias() += tp.value(ia).transpose() * g;
  });
}

Var add(const Var& a, const Var& b) {
  Tape& t = common_tape(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("add: shapes " + shape_string(a.value()) + " and " +
                         shape_string(b.value()));
  }
  const std::size_t ia = a.id(), ib = b.id();
  const bool rg = t.requires_grad(ia) || t.requires_grad(ib);
  return t.push(a.value() + b.value(), rg, [ia, ib](Tape& tp, const DenseMatrix& g) {
    if (tp.requires_grad(ia)) tp.grad(ia) += g;
    if (tp.requires_grad(ib)) tp.grad(ib) += g;
  });
}

Var add_rowwise(const Var& x, const Var& row) {
  Tape& t = common_tape(x, row);
  if (row.rows() != 1 || row.cols() != x.cols()) {
    throw DimensionError("add_rowwise: " + shape_string(x.value()) + " with row " +
                         shape_string(row.value()));
  }
  const std::size_t ix = x.id(), ir = row.id();
  DenseMatrix out = x.value().rowwise() + row.value().row(0);
  const bool rg = t.requires_grad(ix) || t.requires_grad(ir);
  return t.push(std::move(out), rg, [ix, ir](Tape& tp, const DenseMatrix& g) {
    if (tp.requires_grad(ix)) tp.grad(ix) += g;
    if (tp.requires_grad(ir)) tp.grad(ir) += g.colwise().sum();
  });
}

Var scale(const Var& a, double factor) {
  Tape& t = tape_of(a);
  const std::size_t ia = a.id();
  return t.push(a.value() * factor, t.requires_grad(ia),
                [ia, factor](Tape& tp, const DenseMatrix& g) { tp.grad(ia) += g * factor; });
}

Var transpose(const Var& a) {
  Tape& t = tape_of(a);
  const std::size_t ia = a.id();
  return t.push(a.value().transpose(), t.requires_grad(ia),
                [ia](Tape& tp, const DenseMatrix& g) { tp.grad(ia) += g.transpose(); });
}

Var activation(const Var& x, Activation kind) {
  Tape& t = tape_of(x);
  const std::size_t ix = x.id();
  DenseMatrix out = ralm::activation(x.value(), kind);
  // The output node is the next one pushed; derivatives are taken from it.
  const std::size_t iy = t.size();
  return t.push(std::move(out), t.requires_grad(ix),
                [ix, iy, kind](Tape& tp, const DenseMatrix& g) {
                  const auto y = tp.value(iy).array();
                  switch (kind) {
                    case Activation::kTanh:
                      tp.grad(ix).array() += g.array() * (1.0 - y.square());
                      break;
                    case Activation::kRelu:
                      tp.grad(ix).array() += (y > 0.0).select(g.array(), 0.0);
                      break;
                    case Activation::kSigmoid:
                      tp.grad(ix).array() += g.array() * y * (1.0 - y);
                      break;
                  }
                });
}

Var softmax(const Var& v) {
  Tape& t = tape_of(v);
  const std::size_t iv = v.id();
  DenseMatrix out = ralm::softmax(v.value());
  const std::size_t iy = t.size();
  return t.push(std::move(out), t.requires_grad(iv), [iv, iy](Tape& tp, const DenseMatrix& g) {
    const DenseMatrix& y = tp.value(iy);
    const double gy = (g.array() * y.array()).sum();
    tp.grad(iv).array() += y.array() * (g.array() - gy);
  });
}

Var softmax_rows(const Var& x) {
  Tape& t = tape_of(x);
  const std::size_t ix = x.id();
  DenseMatrix out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < out.rows(); ++r) out.row(r) = ralm::softmax(x.value().row(r));
  const std::size_t iy = t.size();
  return t.push(std::move(out), t.requires_grad(ix), [ix, iy](Tape& tp, const DenseMatrix& g) {
    const DenseMatrix& y = tp.value(iy);
    const Vector gy = (g.array() * y.array()).rowwise().sum();
    tp.grad(ix).array() += y.array() * (g.colwise() - gy).array();
  });
}

Var row_dot(const Var& a, const Var& b) {
  Tape& t = common_tape(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("row_dot: shapes " + shape_string(a.value()) + " and " +
                         shape_string(b.value()));
  }
  const std::size_t ia = a.id(), ib = b.id();
  DenseMatrix out = (a.value().array() * b.value().array()).rowwise().sum();
  const bool rg = t.requires_grad(ia) || t.requires_grad(ib);
  return t.push(std::move(out), rg, [ia, ib](Tape& tp, const DenseMatrix& g) {
    const Vector gc = g.col(0);
    if (tp.requires_grad(ia)) tp.grad(ia).array() += tp.value(ib).array().colwise() * gc.array();
    if (tp.requires_grad(ib)) tp.grad(ib).array() += tp.value(ia).array().colwise() * gc.array();
  });
}

Var vstack(std::span<const Var> parts) {
  if (parts.empty()) throw ArgumentError("vstack: no parts");
  Tape& t = tape_of(parts[0]);
  const Eigen::Index cols = parts[0].cols();
  Eigen::Index rows = 0;
  bool rg = false;
  for (const Var& p : parts) {
    common_tape(parts[0], p);
    if (p.cols() != cols) throw DimensionError("vstack: mixed widths");
    rows += p.rows();
    rg = rg || t.requires_grad(p.id());
  }
  DenseMatrix out(rows, cols);
  std::vector<std::size_t> ids;
  ids.reserve(parts.size());
  Eigen::Index r = 0;
  for (const Var& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
    ids.push_back(p.id());
  }
  return t.push(std::move(out), rg, [ids = std::move(ids)](Tape& tp, const DenseMatrix& g) {
    Eigen::Index r = 0;
    for (std::size_t id : ids) {
      const Eigen::Index n = tp.value(id).rows();
      if (tp.requires_grad(id)) tp.grad(id) += g.middleRows(r, n);
      r += n;
    }
  });
}

Var hconcat(std::span<const Var> parts) {
  if (parts.empty()) throw ArgumentError("hconcat: no parts");
  Tape& t = tape_of(parts[0]);
  const Eigen::Index rows = parts[0].rows();
  Eigen::Index cols = 0;
  bool rg = false;
  for (const Var& p : parts) {
    common_tape(parts[0], p);
    if (p.rows() != rows) throw DimensionError("hconcat: mixed heights");
    cols += p.cols();
    rg = rg || t.requires_grad(p.id());
  }
  DenseMatrix out(rows, cols);
  std::vector<std::size_t> ids;
  ids.reserve(parts.size());
  Eigen::Index c = 0;
  for (const Var& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
    ids.push_back(p.id());
  }
  return t.push(std::move(out), rg, [ids = std::move(ids)](Tape& tp, const DenseMatrix& g) {
    Eigen::Index c = 0;
    for (std::size_t id : ids) {
      const Eigen::Index n = tp.value(id).cols();
      if (tp.requires_grad(id)) tp.grad(id) += g.middleCols(c, n);
      c += n;
    }
  });
}

namespace {

void check_rows(const DenseMatrix& table, std::span<const int> rows, const char* op) {
  for (int r : rows) {
    if (r < 0 || r >= table.rows()) {
      throw DimensionError(std::string(op) + ": row " + std::to_string(r) + " outside table of " +
                           std::to_string(table.rows()) + " rows");
    }
  }
}

}  // namespace

Var gather_rows(const Var& table, std::span<const int> rows) {
  Tape& t = tape_of(table);
  const DenseMatrix& tv = table.value();
  check_rows(tv, rows, "gather_rows");
  DenseMatrix out(static_cast<Eigen::Index>(rows.size()), tv.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = tv.row(rows[i]);
  const std::size_t it = table.id();
  std::vector<int> idx(rows.begin(), rows.end());
  return t.push(std::move(out), t.requires_grad(it),
                [it, idx = std::move(idx)](Tape& tp, const DenseMatrix& g) {
                  DenseMatrix& gt = tp.grad(it);
                  for (std::size_t i = 0; i < idx.size(); ++i) {
                    gt.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
                  }
                });
}

Var gather_mean(const Var& table, std::span<const int> rows) {
  Tape& t = tape_of(table);
  const DenseMatrix& tv = table.value();
  if (rows.empty()) return t.constant(DenseMatrix::Zero(1, tv.cols()));
  check_rows(tv, rows, "gather_mean");
  DenseMatrix out = DenseMatrix::Zero(1, tv.cols());
  for (int r : rows) out.row(0) += tv.row(r);
  const double inv = 1.0 / static_cast<double>(rows.size());
  out *= inv;
  const std::size_t it = table.id();
  std::vector<int> idx(rows.begin(), rows.end());
  return t.push(std::move(out), t.requires_grad(it),
                [it, inv, idx = std::move(idx)](Tape& tp, const DenseMatrix& g) {
                  DenseMatrix& gt = tp.grad(it);
                  for (int r : idx) gt.row(r) += g.row(0) * inv;
                });
}

Var embedding_bag(const Var& table, std::span<const std::vector<int>> bags) {
  Tape& t = tape_of(table);
  const DenseMatrix& tv = table.value();
  DenseMatrix out = DenseMatrix::Zero(static_cast<Eigen::Index>(bags.size()), tv.cols());
  for (std::size_t b = 0; b < bags.size(); ++b) {
    if (bags[b].empty()) continue;
    check_rows(tv, bags[b], "embedding_bag");
    const auto row = static_cast<Eigen::Index>(b);
    for (int r : bags[b]) out.row(row) += tv.row(r);
    out.row(row) /= static_cast<double>(bags[b].size());
  }
  const std::size_t it = table.id();
  if (!t.requires_grad(it)) return t.push(std::move(out), false, nullptr);
  std::vector<std::vector<int>> idx(bags.begin(), bags.end());
  return t.push(std::move(out), true, [it, idx = std::move(idx)](Tape& tp, const DenseMatrix& g) {
    DenseMatrix& gt = tp.grad(it);
    for (std::size_t b = 0; b < idx.size(); ++b) {
      if (idx[b].empty()) continue;
      const double inv = 1.0 / static_cast<double>(idx[b].size());
      for (int r : idx[b]) gt.row(r) += g.row(static_cast<Eigen::Index>(b)) * inv;
    }
  });
}

Var column(const Var& x, Eigen::Index j) {
  Tape& t = tape_of(x);
  if (j < 0 || j >= x.cols()) throw ArgumentError("column: index out of range");
  const std::size_t ix = x.id();
  return t.push(x.value().col(j), t.requires_grad(ix), [ix, j](Tape& tp, const DenseMatrix& g) {
    tp.grad(ix).col(j) += g.col(0);
  });
}

Var scale_rows(const Var& x, const Var& factors) {
  Tape& t = common_tape(x, factors);
  if (factors.cols() != 1 || factors.rows() != x.rows()) {
    throw DimensionError("scale_rows: shapes " + shape_string(x.value()) + " and " +
                         shape_string(factors.value()));
  }
  const std::size_t ix = x.id(), is = factors.id();
  DenseMatrix out = x.value().array().colwise() * factors.value().col(0).array();
  const bool rg = t.requires_grad(ix) || t.requires_grad(is);
  return t.push(std::move(out), rg, [ix, is](Tape& tp, const DenseMatrix& g) {
    if (tp.requires_grad(ix)) {
      tp.grad(ix).array() += g.array().colwise() * tp.value(is).col(0).array();
    }
    if (tp.requires_grad(is)) {
      tp.grad(is).col(0) += (g.array() * tp.value(ix).array()).rowwise().sum().matrix();
    }
  });
}

Var sum(std::span<const Var> terms) {
  if (terms.empty()) throw ArgumentError("sum: no terms");
  Tape& t = tape_of(terms[0]);
  DenseMatrix out = terms[0].value();
  bool rg = t.requires_grad(terms[0].id());
  std::vector<std::size_t> ids{terms[0].id()};
  for (std::size_t i = 1; i < terms.size(); ++i) {
    common_tape(terms[0], terms[i]);
    if (terms[i].rows() != out.rows() || terms[i].cols() != out.cols()) {
      throw DimensionError("sum: mixed shapes");
    }
    out += terms[i].value();
    rg = rg || t.requires_grad(terms[i].id());
    ids.push_back(terms[i].id());
  }
  return t.push(std::move(out), rg, [ids = std::move(ids)](Tape& tp, const DenseMatrix& g) {
    for (std::size_t id : ids) {
      if (tp.requires_grad(id)) tp.grad(id) += g;
    }
  });
}

Var dot(const Var& a, const Var& b) {
  Tape& t = common_tape(a, b);
  if (a.value().size() != b.value().size()) {
    throw DimensionError("dot: shapes " + shape_string(a.value()) + " and " +
                         shape_string(b.value()));
  }
  const std::size_t ia = a.id(), ib = b.id();
  DenseMatrix out(1, 1);
  out(0, 0) = (a.value().array() * b.value().reshaped<Eigen::RowMajor>(a.rows(), a.cols()).array()).sum();
  const bool rg = t.requires_grad(ia) || t.requires_grad(ib);
  return t.push(std::move(out), rg, [ia, ib](Tape& tp, const DenseMatrix& g) {
    const double s = g(0, 0);
    const DenseMatrix& va = tp.value(ia);
    const DenseMatrix& vb = tp.value(ib);
    if (tp.requires_grad(ia)) tp.grad(ia) += s * vb.reshaped<Eigen::RowMajor>(va.rows(), va.cols());
    if (tp.requires_grad(ib)) tp.grad(ib) += s * va.reshaped<Eigen::RowMajor>(vb.rows(), vb.cols());
  });
}

Var softmax_cross_entropy(const Var& logits, Eigen::Index target) {
  Tape& t = tape_of(logits);
  const DenseMatrix& z = logits.value();
  if (target < 0 || target >= z.size()) throw ArgumentError("softmax_cross_entropy: bad target");
  const double shift = z.maxCoeff();
  const double lse = shift + std::log((z.array() - shift).exp().sum());
  DenseMatrix out(1, 1);
  out(0, 0) = lse - z.reshaped<Eigen::RowMajor>()(target);
  const std::size_t iz = logits.id();
  return t.push(std::move(out), t.requires_grad(iz),
                [iz, target](Tape& tp, const DenseMatrix& g) {
                  DenseMatrix p = ralm::softmax(tp.value(iz));
                  p.reshaped<Eigen::RowMajor>()(target) -= 1.0;
                  tp.grad(iz) += g(0, 0) * p;
                });
}

Var grouped_softmax_cross_entropy(const Var& logits, std::span<const Eigen::Index> offsets) {
  Tape& t = tape_of(logits);
  const DenseMatrix& z = logits.value();
  if (z.cols() != 1) throw DimensionError("grouped_softmax_cross_entropy: logits must be a column");
  if (offsets.size() < 2 || offsets.front() != 0 || offsets.back() != z.rows()) {
    throw ArgumentError("grouped_softmax_cross_entropy: offsets must run from 0 to rows");
  }
  const std::size_t groups = offsets.size() - 1;
  Vector p(z.rows());
  double loss = 0.0;
  for (std::size_t g = 0; g < groups; ++g) {
    const Eigen::Index lo = offsets[g], n = offsets[g + 1] - offsets[g];
    if (n < 1) throw ArgumentError("grouped_softmax_cross_entropy: empty group");
    const auto seg = z.col(0).segment(lo, n);
    const double shift = seg.maxCoeff();
    const double lse = shift + std::log((seg.array() - shift).exp().sum());
    loss += lse - seg(0);
    p.segment(lo, n) = (seg.array() - lse).exp().matrix();
    p(lo) -= 1.0;
  }
  const double inv = 1.0 / static_cast<double>(groups);
  DenseMatrix out(1, 1);
  out(0, 0) = loss * inv;
  const std::size_t iz = logits.id();
  return t.push(std::move(out), t.requires_grad(iz),
                [iz, inv, p = std::move(p)](Tape& tp, const DenseMatrix& g) {
                  tp.grad(iz).col(0) += (g(0, 0) * inv) * p;
                });
}

Var sigmoid_bce_with_logits(const Var& logit, double label) {
  Tape& t = tape_of(logit);
  if (logit.value().size() != 1) throw DimensionError("sigmoid_bce_with_logits: logit must be 1x1");
  const double z = logit.scalar();
  DenseMatrix out(1, 1);
  out(0, 0) = std::max(z, 0.0) - z * label + std::log1p(std::exp(-std::abs(z)));
  const std::size_t iz = logit.id();
  return t.push(std::move(out), t.requires_grad(iz),
                [iz, label](Tape& tp, const DenseMatrix& g) {
                  const double zz = tp.value(iz)(0, 0);
                  const double p = 1.0 / (1.0 + std::exp(-zz));
                  tp.grad(iz)(0, 0) += g(0, 0) * (p - label);
                });
}


Var mean_sigmoid_bce_with_logits(const Var& logits, std::span<const double> labels) {
  Tape& t = tape_of(logits);
  const DenseMatrix& z = logits.value();
  if (z.cols() != 1 || static_cast<std::size_t>(z.rows()) != labels.size() || labels.empty()) {
    throw DimensionError("mean_sigmoid_bce_with_logits: logits " + shape_string(z) + " vs " +
                         std::to_string(labels.size()) + " labels");
  }
  const Vector y = Eigen::Map<const Vector>(labels.data(), static_cast<Eigen::Index>(labels.size()));
  const double n = static_cast<double>(labels.size());
  DenseMatrix out(1, 1);
  out(0, 0) = (z.col(0).array().max(0.0) - z.col(0).array() * y.array() +
               (-z.col(0).array().abs()).exp().log1p())
                  .sum() /
              n;
  const std::size_t iz = logits.id();
  return t.push(std::move(out), t.requires_grad(iz), [iz, y, n](Tape& tp, const DenseMatrix& g) {
    const Vector p = (1.0 + (-tp.value(iz).col(0).array()).exp()).inverse().matrix();
    tp.grad(iz).col(0) += (g(0, 0) / n) * (p - y);
  });
}

}  // namespace ralm::nn
