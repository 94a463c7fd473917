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
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "recipegen/autograd.hpp"
#include "recipegen/model.hpp"

namespace recipegen::nn {

struct LSTMConfig {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 32;
  std::size_t hidden_dim = 128;
  std::size_t num_layers = 1;
  std::size_t context_len = 256;

  /// Throws ValidationError when any field is zero.
  void validate() const;
  bool operator==(const LSTMConfig&) const = default;
};

/// Per-layer recurrent state; each tensor is [batch, hidden_dim].
struct LSTMState {
  std::vector<Tensor> h;
  std::vector<Tensor> c;

  static LSTMState zeros(const LSTMConfig& config, std::size_t batch);
};

/// Parameter names and shapes: "embed" [V,E]; per layer l "lstm.l.W"
/// [(in+H), 4H] with gate column blocks ordered i, f, o, g and "lstm.l.b" [4H];
/// "head.W" [H,V] and "head.b" [V].
std::vector<ParamSpec> lstm_manifest(const LSTMConfig& config);

/// Normal(0, 0.02) weights, zero biases except the forget gate at 1.0.
void lstm_init(const LSTMConfig& config, ParameterSet& params, std::mt19937_64& rng);

struct CellOutput {
  Var h;
  Var c;
};

/// One step for a batch: x [B,in], h and c [B,H], W [(in+H),4H], b [4H].
CellOutput lstm_cell(Var x, Var h, Var c, Var W, Var b);

struct LSTMForward {
  Var logits;        // [batch*seq, V], row b*seq + t
  LSTMState final;   // state after the last position
};

/// Embeds `ids` (batch-major, batch*seq entries), runs the stacked recurrence
/// from `initial` (zeros when null) and projects every hidden state to logits.
LSTMForward lstm_forward(const LSTMConfig& config, const ParamFn& param, std::span<const std::size_t> ids,
                         std::size_t batch, std::size_t seq, const LSTMState* initial = nullptr);

}  // namespace recipegen::nn
