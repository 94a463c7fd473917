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
#include <filesystem>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "recipegen/lstm.hpp"
#include "recipegen/model.hpp"
#include "recipegen/transformer.hpp"
#include "recipegen/vocabulary.hpp"

namespace recipegen::nn {

enum class ModelKind { lstm, transformer };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

using ModelConfig = std::variant<LSTMConfig, TransformerConfig>;

struct TrainingMeta {
  std::uint64_t steps = 0;
  double final_loss = 0.0;
  std::uint64_t seed = 0;

  bool operator==(const TrainingMeta&) const = default;
};

/// Incremental next-token interface used by generation and evaluation.
class DecodeState {
 public:
  virtual ~DecodeState() = default;
  /// Appends `ids` to the history and returns next-token logits [V] after
  /// the last one. `ids` must be nonempty.
  virtual std::vector<double> feed(std::span<const TokenId> ids) = 0;
};

/// A trained or freshly initialized model: architecture config, parameters,
/// vocabulary and training metadata. Const methods are safe to call from
/// concurrent threads.
class Model {
 public:
  /// Draws the initial parameters from `seed`. The config's vocab_size is
  /// overwritten with the vocabulary size.
  static Model create(ModelConfig config, Vocabulary vocab, std::uint64_t seed);

  ModelKind kind() const;
  const ModelConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  std::size_t context_len() const;
  std::size_t vocab_size() const { return vocab_.size(); }

  TrainingMeta meta;

  /// Logits [batch*seq, V] for batch-major ids. Training mode enables
  /// dropout through `rng`.
  Var forward(Tape& tape, const ParamFn& param, std::span<const std::size_t> ids, std::size_t batch,
              std::size_t seq, std::mt19937_64* rng = nullptr) const;

  /// LSTM: carries the recurrent state. Transformer: re-runs the last
  /// context_len tokens of the history.
  std::unique_ptr<DecodeState> start_decoding() const;

  /// Binary checkpoint: a text header ending in "end_header\n", the embedded
  /// vocabulary, then little-endian float64 parameter blocks in manifest order.
  std::string serialize() const;
  static Model deserialize(std::string_view bytes);
  void save(const std::filesystem::path& path) const;
  static Model load(const std::filesystem::path& path);

 private:
  Model(ModelConfig config, Vocabulary vocab);

  ModelConfig config_;
  Vocabulary vocab_;
  ParameterSet params_;
};

std::vector<ParamSpec> manifest(const ModelConfig& config);

}  // namespace recipegen::nn
