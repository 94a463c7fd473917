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

#include "recipegen/lstm.hpp"

#include <string>

#include "recipegen/errors.hpp"

namespace recipegen::nn {

namespace {

std::string layer_name(std::size_t l, const char* leaf) {
  return "lstm." + std::to_string(l) + "." + leaf;
}

/// Gate nonlinearities and state update from the preactivation z [B,4H].
CellOutput apply_gates(Var z, Var c, std::size_t hidden) {
  Var i = sigmoid(slice_cols(z, 0, hidden));
  Var f = sigmoid(slice_cols(z, hidden, 2 * hidden));
  Var o = sigmoid(slice_cols(z, 2 * hidden, 3 * hidden));
  Var g = tanh(slice_cols(z, 3 * hidden, 4 * hidden));
  Var c_next = add(mul(f, c), mul(i, g));
  Var h_next = mul(o, tanh(c_next));
  return {h_next, c_next};
}

}  // namespace

void LSTMConfig::validate() const {
  if (vocab_size == 0 || embed_dim == 0 || hidden_dim == 0 || num_layers == 0 || context_len == 0) {
    throw ValidationError("LSTM config fields must all be >= 1");
  }
}

LSTMState LSTMState::zeros(const LSTMConfig& config, std::size_t batch) {
  LSTMState s;
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    s.h.emplace_back(Shape{batch, config.hidden_dim});
    s.c.emplace_back(Shape{batch, config.hidden_dim});
  }
  return s;
}

std::vector<ParamSpec> lstm_manifest(const LSTMConfig& config) {
  config.validate();
  const std::size_t H = config.hidden_dim;
  std::vector<ParamSpec> m;
  m.push_back({"embed", {config.vocab_size, config.embed_dim}});
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    const std::size_t in = l == 0 ? config.embed_dim : H;
    m.push_back({layer_name(l, "W"), {in + H, 4 * H}});
    m.push_back({layer_name(l, "b"), {4 * H}});
  }
  m.push_back({"head.W", {H, config.vocab_size}});
  m.push_back({"head.b", {config.vocab_size}});
  return m;
}

void lstm_init(const LSTMConfig& config, ParameterSet& params, std::mt19937_64& rng) {
  init_normal(params, rng);
  const std::size_t H = config.hidden_dim;
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    auto b = params.get(layer_name(l, "b")).data();
    for (std::size_t j = H; j < 2 * H; ++j) b[j] = 1.0;
  }
}

CellOutput lstm_cell(Var x, Var h, Var c, Var W, Var b) {
  const std::size_t hidden = h.value().cols();
  if (W.value().cols() != 4 * hidden || c.value().shape() != h.value().shape()) {
    throw ShapeError("lstm_cell: weight " + shape_string(W.value().shape()) + " does not fit hidden size " +
                     std::to_string(hidden));
  }
  Var z = add_bias(matmul(concat_cols(x, h), W), b);
  return apply_gates(z, c, hidden);
}

LSTMForward lstm_forward(const LSTMConfig& config, const ParamFn& param, std::span<const std::size_t> ids,
                         std::size_t batch, std::size_t seq, const LSTMState* initial) {
  config.validate();
  if (ids.size() != batch * seq || ids.empty()) {
    throw ShapeError("lstm_forward: expected " + std::to_string(batch * seq) + " ids, got " +
                     std::to_string(ids.size()));
  }
  const std::size_t H = config.hidden_dim;
  Var embed = param("embed");
  Tape& tape = embed.tape();

  // Time-major rows t*batch + b so each step reads a contiguous block.
  std::vector<std::size_t> tm(ids.size());
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < seq; ++t) tm[t * batch + b] = ids[b * seq + t];
  }
  Var layer_in = embedding(embed, tm);

  LSTMForward out;
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    const std::size_t in = l == 0 ? config.embed_dim : H;
    Var W = param(layer_name(l, "W"));
    Var bias = param(layer_name(l, "b"));
    // The input half of the projection runs once for all steps.
    Var zx = add_bias(matmul(layer_in, slice_rows(W, 0, in)), bias);
    Var Wh = slice_rows(W, in, in + H);

    Var h;
    Var c;
    if (initial) {
      if (initial->h.size() != config.num_layers || initial->h[l].rows() != batch ||
          initial->h[l].cols() != H) {
        throw ShapeError("lstm_forward: initial state does not match config and batch");
      }
      h = tape.constant(initial->h[l]);
      c = tape.constant(initial->c[l]);
    } else {
      h = tape.constant(Tensor({batch, H}));
      c = tape.constant(Tensor({batch, H}));
    }
    std::vector<Var> steps;
    steps.reserve(seq);
    for (std::size_t t = 0; t < seq; ++t) {
      Var z = add(slice_rows(zx, t * batch, (t + 1) * batch), matmul(h, Wh));
      auto next = apply_gates(z, c, H);
      h = next.h;
      c = next.c;
      steps.push_back(h);
    }
    out.final.h.push_back(h.value());
    out.final.c.push_back(c.value());
    layer_in = concat_rows(steps);
  }

  Var logits_tm = add_bias(matmul(layer_in, param("head.W")), param("head.b"));
  std::vector<std::size_t> to_batch_major(ids.size());
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < seq; ++t) to_batch_major[b * seq + t] = t * batch + b;
  }
  out.logits = embedding(logits_tm, to_batch_major);
  return out;
}

}  // namespace recipegen::nn
