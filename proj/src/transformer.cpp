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

#include "recipegen/transformer.hpp"

#include <string>

#include "recipegen/errors.hpp"

namespace recipegen::nn {

namespace {

std::string block(std::size_t l) { return "block." + std::to_string(l) + "."; }

Var linear(const ParamFn& param, Var x, const std::string& name) {
  return add_bias(matmul(x, param(name + ".W")), param(name + ".b"));
}

Var maybe_dropout(Var x, double rate, std::mt19937_64* rng) {
  return rng && rate > 0.0 ? dropout(x, rate, *rng) : x;
}

}  // namespace

void TransformerConfig::validate() const {
  if (vocab_size == 0 || d_model == 0 || n_heads == 0 || n_layers == 0 || ff_dim == 0 || context_len == 0) {
    throw ValidationError("transformer config sizes must all be >= 1");
  }
  if (d_model % n_heads != 0) throw ValidationError("d_model must be divisible by n_heads");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ValidationError("dropout_rate must be in [0, 1)");
}

std::vector<ParamSpec> transformer_manifest(const TransformerConfig& config) {
  config.validate();
  const std::size_t d = config.d_model;
  std::vector<ParamSpec> m;
  m.push_back({"tok_embed", {config.vocab_size, d}});
  m.push_back({"pos_embed", {config.context_len, d}});
  for (std::size_t l = 0; l < config.n_layers; ++l) {
    const std::string p = block(l);
    m.push_back({p + "ln1.g", {d}});
    m.push_back({p + "ln1.b", {d}});
    m.push_back({p + "attn.qkv.W", {d, 3 * d}});
    m.push_back({p + "attn.qkv.b", {3 * d}});
    m.push_back({p + "attn.proj.W", {d, d}});
    m.push_back({p + "attn.proj.b", {d}});
    m.push_back({p + "ln2.g", {d}});
    m.push_back({p + "ln2.b", {d}});
    m.push_back({p + "mlp.fc.W", {d, config.ff_dim}});
    m.push_back({p + "mlp.fc.b", {config.ff_dim}});
    m.push_back({p + "mlp.proj.W", {config.ff_dim, d}});
    m.push_back({p + "mlp.proj.b", {d}});
  }
  m.push_back({"ln_f.g", {d}});
  m.push_back({"ln_f.b", {d}});
  if (!config.tie_weights) m.push_back({"head.W", {d, config.vocab_size}});
  return m;
}

void transformer_init(const TransformerConfig&, ParameterSet& params, std::mt19937_64& rng) {
  init_normal(params, rng);
}

Var causal_attention(Var x, const ParamFn& param, const std::string& prefix, std::size_t batch,
                     std::size_t seq, std::size_t n_heads) {
  const std::size_t d = x.value().cols();
  Var qkv = linear(param, x, prefix + "attn.qkv");
  Var q = slice_cols(qkv, 0, d);
  Var k = slice_cols(qkv, d, 2 * d);
  Var v = slice_cols(qkv, 2 * d, 3 * d);
  Var heads = causal_attention_core(q, k, v, batch, seq, n_heads);
  return linear(param, heads, prefix + "attn.proj");
}

Var transformer_forward(const TransformerConfig& config, const ParamFn& param,
                        std::span<const std::size_t> ids, std::size_t batch, std::size_t seq,
                        std::mt19937_64* rng) {
  config.validate();
  if (seq > config.context_len) {
    throw ContextOverflowError("sequence of " + std::to_string(seq) + " tokens exceeds context_len " +
                               std::to_string(config.context_len));
  }
  if (ids.size() != batch * seq || ids.empty()) {
    throw ShapeError("transformer_forward: expected " + std::to_string(batch * seq) + " ids, got " +
                     std::to_string(ids.size()));
  }
  std::vector<std::size_t> positions(ids.size());
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i % seq;

  Var tok_table = param("tok_embed");
  Var x = add(embedding(tok_table, ids), embedding(param("pos_embed"), positions));
  x = maybe_dropout(x, config.dropout_rate, rng);

  for (std::size_t l = 0; l < config.n_layers; ++l) {
    const std::string p = block(l);
    Var h = layer_norm(x, param(p + "ln1.g"), param(p + "ln1.b"));
    Var a = causal_attention(h, param, p, batch, seq, config.n_heads);
    x = add(x, maybe_dropout(a, config.dropout_rate, rng));
    h = layer_norm(x, param(p + "ln2.g"), param(p + "ln2.b"));
    Var m = linear(param, gelu(linear(param, h, p + "mlp.fc")), p + "mlp.proj");
    x = add(x, maybe_dropout(m, config.dropout_rate, rng));
  }
  x = layer_norm(x, param("ln_f.g"), param("ln_f.b"));
  Var head = config.tie_weights ? transpose(tok_table) : param("head.W");
  return matmul(x, head);
}

}  // namespace recipegen::nn
