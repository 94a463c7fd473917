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
#include <functional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "recipegen/checkpoint.hpp"
#include "recipegen/corpus.hpp"
#include "recipegen/vocabulary.hpp"

namespace recipegen {

struct TrainConfig {
  std::size_t batch_size = 16;
  std::size_t context_len = 256;
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t max_steps = 1000;
  std::size_t checkpoint_every = 0;  // 0: only at completion
  std::uint64_t seed = 0;
  double grad_clip_norm = 1.0;  // 0 disables clipping
  /// Every `eval_every` steps the training stream cross-entropy is measured;
  /// training stops once it falls below `target_loss`. 0 disables both.
  std::size_t eval_every = 0;
  double target_loss = 0.0;

  /// Throws ValidationError on out-of-range fields.
  void validate() const;
};

/// Everything a flat key=value config file can set: the optimizer, the
/// architecture and the vocabulary. `context_len` applies to both the
/// training windows and the model.
struct RunConfig {
  TrainConfig train;
  nn::LSTMConfig lstm;
  nn::TransformerConfig transformer;
  VocabMode transformer_vocab = VocabMode::character;
  std::size_t min_freq = 1;
};

/// Parses "key = value" lines; '#' starts a comment. Unknown keys and
/// malformed values raise ValidationError naming the line.
RunConfig parse_run_config(std::string_view text, RunConfig defaults = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig defaults = {});

/// Encodes documents back to back into one token stream.
std::vector<TokenId> encode_stream(std::span<const TaggedDocument> docs, const Vocabulary& vocab);

struct Batch {
  std::vector<std::size_t> inputs;   // [batch * context_len], batch-major
  std::vector<std::size_t> targets;  // inputs shifted by one stream position
};

/// Uniformly placed windows over a token stream, reproducible from the seed.
class BatchStream {
 public:
  /// Throws InsufficientDataError unless stream.size() > context_len.
  BatchStream(std::vector<TokenId> stream, std::size_t context_len, std::size_t batch_size, std::uint64_t seed);

  Batch next();
  std::size_t stream_size() const { return stream_.size(); }

 private:
  std::vector<TokenId> stream_;
  std::size_t context_len_;
  std::size_t batch_size_;
  std::mt19937_64 rng_;
};

BatchStream make_stream(std::span<const TaggedDocument> docs, const Vocabulary& vocab, std::size_t context_len,
                        std::size_t batch_size, std::uint64_t seed);

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t t = 0;
};

/// One bias-corrected Adam update from the gradients stored on `params`,
/// after optional global-norm clipping. Returns the pre-clip gradient norm.
/// Throws DivergenceError, leaving `params` untouched, on a non-finite
/// gradient.
double adam_step(nn::ParameterSet& params, AdamState& state, const TrainConfig& config);

struct LogEntry {
  std::size_t step = 0;
  double loss = 0.0;
  double tokens_per_sec = 0.0;
};

struct TrainReport {
  std::vector<LogEntry> log;
  std::filesystem::path checkpoint_path;
  std::size_t total_steps = 0;  // cumulative, including resumed steps
  std::size_t steps_this_run = 0;
  double elapsed_seconds = 0.0;
  double final_loss = 0.0;
  bool reached_target = false;

  /// "step<TAB>loss" lines with losses printed round-trip exact.
  std::string loss_log() const;
};

/// Optional per-step observer, e.g. for progress output.
using StepCallback = std::function<void(const LogEntry&)>;

/// Trains `model` in place. Checkpoints go to `out` (skipped when empty)
/// every checkpoint_every steps and at completion. On divergence the last
/// written checkpoint is kept and DivergenceError propagates.
TrainReport train(nn::Model& model, std::span<const TaggedDocument> docs, const TrainConfig& config,
                  const std::filesystem::path& out = {}, const StepCallback& on_step = {});

/// Builds the vocabulary over `docs` and initializes a model from config.seed.
nn::Model init_model(const nn::ModelConfig& config, VocabMode mode, std::size_t min_freq,
                     std::span<const TaggedDocument> docs, std::uint64_t seed);

struct StreamScore {
  double total_nll = 0.0;
  std::size_t tokens = 0;

  double cross_entropy() const { return total_nll / static_cast<double>(tokens); }
  double perplexity() const;
};

/// Next-token negative log-likelihood of every stream position after the
/// first, in eval mode. The LSTM carries its state across the whole stream;
/// the transformer slides a context_len window by half its length and scores
/// each position exactly once.
StreamScore score_stream(const nn::Model& model, std::span<const TokenId> stream);

/// exp(mean next-token cross-entropy) over the concatenated documents.
/// Throws EmptyCorpusError on empty input.
double perplexity(const nn::Model& model, std::span<const TaggedDocument> docs);
double stream_cross_entropy(const nn::Model& model, std::span<const TaggedDocument> docs);

}  // namespace recipegen
