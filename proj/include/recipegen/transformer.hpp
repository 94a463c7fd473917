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
#include <random>
#include <span>
#include <vector>

#include "recipegen/autograd.hpp"
#include "recipegen/model.hpp"

namespace recipegen::nn {

struct TransformerConfig {
  std::size_t vocab_size = 0;
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::size_t n_layers = 2;
  std::size_t ff_dim = 256;
  std::size_t context_len = 128;
  double dropout_rate = 0.1;
  bool tie_weights = false;

  /// Throws ValidationError on zero sizes, d_model % n_heads != 0 or a
  /// dropout rate outside [0, 1).
  void validate() const;
  bool operator==(const TransformerConfig&) const = default;
};

/// "tok_embed" [V,d], "pos_embed" [T,d]; per block l under "block.l.":
/// ln1.g/b, attn.qkv.W [d,3d], attn.qkv.b, attn.proj.W [d,d], attn.proj.b,
/// ln2.g/b, mlp.fc.W [d,ff], mlp.fc.b, mlp.proj.W [ff,d], mlp.proj.b; then
/// "ln_f.g/b" and, unless tied, "head.W" [d,V].
std::vector<ParamSpec> transformer_manifest(const TransformerConfig& config);

void transformer_init(const TransformerConfig& config, ParameterSet& params, std::mt19937_64& rng);

/// Fused QKV projection, causal multi-head attention and output projection
/// over x [batch*seq, d]. `prefix` selects the block, e.g. "block.0.".
Var causal_attention(Var x, const ParamFn& param, const std::string& prefix, std::size_t batch,
                     std::size_t seq, std::size_t n_heads);

/// Logits [batch*seq, V] for batch-major `ids`. Dropout runs only when
/// `rng` is non-null (training mode). Throws ContextOverflowError when
/// seq > context_len.
Var transformer_forward(const TransformerConfig& config, const ParamFn& param,
                        std::span<const std::size_t> ids, std::size_t batch, std::size_t seq,
                        std::mt19937_64* rng = nullptr);

}  // namespace recipegen::nn
