// Copyright 2026 The recipegen Authors
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
#include <deque>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "recipegen/tensor.hpp"

namespace recipegen::nn {

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  Tape& tape() const { return *tape_; }
  std::size_t index() const { return index_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t index) : tape_(tape), index_(index) {}

  Tape* tape_ = nullptr;
  std::size_t index_ = 0;
};

/// Reverse-mode gradient tape. Every op appends its output together with a
/// closure that pushes the output gradient back to its inputs; backward()
/// runs the closures in reverse order.
///
/// A tape with gradients disabled records values only, which is what
/// inference uses. A Tape is not thread-safe; concurrent forward passes each
/// use their own tape over shared, read-only parameter tensors.
class Tape {
 public:
  /// Receives the op's own output handle.
  using BackwardFn = std::function<void(Var out)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Owned leaf without gradient.
  Var constant(Tensor value);
  /// Leaf referencing `value` without copying it. `value` must outlive the tape.
  Var constant_ref(const Tensor& value);
  /// Leaf referencing `source`; backward() accumulates into `source.grad()`.
  Var variable(Tensor& source);

  /// Seeds d(loss)/d(loss) = 1 and propagates. `loss` must hold one element.
  void backward(Var loss);

  bool grad_enabled() const { return grad_enabled_; }
  std::size_t size() const { return nodes_.size(); }

  // --- op authoring -------------------------------------------------------
  /// Records an op output. `fn` is dropped when no input needs a gradient.
  Var push(Tensor value, bool requires_grad, BackwardFn fn);
  bool requires_grad(Var v) const { return nodes_[v.index()].requires_grad; }
  const Tensor& value(Var v) const;
  /// Gradient buffer of `v`, zero-initialized on first access.
  std::vector<double>& grad(Var v);

 private:
  struct Node {
    Tensor owned;
    const Tensor* ref = nullptr;
    Tensor* sink = nullptr;
    std::vector<double> grad;
    BackwardFn backward;
    bool requires_grad = false;
  };

  bool grad_enabled_;
  std::deque<Node> nodes_;
};

inline const Tensor& Var::value() const { return tape_->value(*this); }

// ---------------------------------------------------------------------------
// Differentiable ops. Inputs are rank-1 or rank-2; shapes noted as [rows, cols].

/// [m,k]·[k,n] -> [m,n].
Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
/// Adds a [n] (or [1,n]) bias to every row of a [m,n] input.
Var add_bias(Var a, Var bias);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var sigmoid(Var a);
Var tanh(Var a);
/// tanh approximation used by GPT-2.
Var gelu(Var a);
/// Softmax along `axis` (0: columns, 1: rows) of a rank-2 input; rank-1
/// inputs are a single row. Throws NanError on NaN input.
Var softmax(Var a, int axis = 1);
/// Per-row normalization to zero mean and unit variance, then `gain`/`bias`.
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
/// Row gather. Throws RangeError for ids >= rows of `table`.
Var embedding(Var table, std::span<const std::size_t> ids);
/// Mean over rows of -log softmax(logits)[row, target]. Returns shape [1].
Var cross_entropy(Var logits, std::span<const std::size_t> targets);
Var concat_cols(Var a, Var b);
Var slice_cols(Var a, std::size_t begin, std::size_t end);
Var slice_rows(Var a, std::size_t begin, std::size_t end);
Var concat_rows(std::span<const Var> parts);
/// Inverted dropout; identity when `rate` is 0.
Var dropout(Var a, double rate, std::mt19937_64& rng);
/// Sum of all elements, shape [1].
Var sum(Var a);

/// Multi-head scaled dot-product attention with a causal mask. q, k, v are
/// [batch*seq, d_model] in batch-major row order; heads split d_model into
/// contiguous column blocks.
Var causal_attention_core(Var q, Var k, Var v, std::size_t batch, std::size_t seq,
                          std::size_t n_heads);

}  // namespace recipegen::nn
