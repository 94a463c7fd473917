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

#include "recipegen/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "recipegen/errors.hpp"
#include "recipegen/rng.hpp"

namespace recipegen {

namespace {

using nn::Model;
using nn::Tape;
using nn::Var;

// Derives independent generator seeds from the run seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t offset = 0) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1) + offset * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& value, const std::string& where) {
  T out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ValidationError(where + ": '" + value + "' is not a valid number");
  return out;
}

bool parse_bool(const std::string& value, const std::string& where) {
  if (value == "1" || value == "true") return true;
  if (value == "0" || value == "false") return false;
  throw ValidationError(where + ": expected true/false, got '" + value + "'");
}

/// Negative log-softmax at `target` for one row of logits.
double row_nll(const double* row, std::size_t v, std::size_t target) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < v; ++j) mx = std::max(mx, row[j]);
  double total = 0.0;
  for (std::size_t j = 0; j < v; ++j) total += std::exp(row[j] - mx);
  return std::log(total) + mx - row[target];
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (context_len < 1) throw ValidationError("context_len must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ValidationError("learning_rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ValidationError("adam betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw ValidationError("eps must be > 0");
  if (!(grad_clip_norm >= 0.0)) throw ValidationError("grad_clip_norm must be >= 0");
  if (target_loss < 0.0) throw ValidationError("target_loss must be >= 0");
}

RunConfig parse_run_config(std::string_view text, RunConfig cfg) {
  std::istringstream is{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    const std::string where = "config line " + std::to_string(lineno);
    if (eq == std::string::npos) throw ValidationError(where + ": expected key = value");
    const std::string key = trim(std::string_view(content).substr(0, eq));
    const std::string value = trim(std::string_view(content).substr(eq + 1));
    auto size = [&] { return parse_number<std::size_t>(value, where); };
    auto real = [&] { return parse_number<double>(value, where); };

    auto& t = cfg.train;
    if (key == "batch_size") t.batch_size = size();
    else if (key == "context_len") {
      t.context_len = size();
      cfg.lstm.context_len = t.context_len;
      cfg.transformer.context_len = t.context_len;
    }
    else if (key == "learning_rate") t.learning_rate = real();
    else if (key == "beta1") t.beta1 = real();
    else if (key == "beta2") t.beta2 = real();
    else if (key == "eps") t.eps = real();
    else if (key == "max_steps") t.max_steps = size();
    else if (key == "checkpoint_every") t.checkpoint_every = size();
    else if (key == "seed") t.seed = parse_number<std::uint64_t>(value, where);
    else if (key == "grad_clip_norm") t.grad_clip_norm = real();
    else if (key == "eval_every") t.eval_every = size();
    else if (key == "target_loss") t.target_loss = real();
    else if (key == "embed_dim") cfg.lstm.embed_dim = size();
    else if (key == "hidden_dim") cfg.lstm.hidden_dim = size();
    else if (key == "num_layers") cfg.lstm.num_layers = size();
    else if (key == "d_model") cfg.transformer.d_model = size();
    else if (key == "n_heads") cfg.transformer.n_heads = size();
    else if (key == "n_layers") cfg.transformer.n_layers = size();
    else if (key == "ff_dim") cfg.transformer.ff_dim = size();
    else if (key == "dropout_rate") cfg.transformer.dropout_rate = real();
    else if (key == "tie_weights") cfg.transformer.tie_weights = parse_bool(value, where);
    else if (key == "vocab") cfg.transformer_vocab = parse_vocab_mode(value);
    else if (key == "min_freq") cfg.min_freq = size();
    else throw ValidationError(where + ": unknown key '" + key + "'");
  }
  cfg.train.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig defaults) {
  return parse_run_config(read_file(path), std::move(defaults));
}

std::vector<TokenId> encode_stream(std::span<const TaggedDocument> docs, const Vocabulary& vocab) {
  std::vector<TokenId> stream;
  for (const auto& d : docs) {
    auto ids = vocab.encode(d.text);
    stream.insert(stream.end(), ids.begin(), ids.end());
  }
  return stream;
}

BatchStream::BatchStream(std::vector<TokenId> stream, std::size_t context_len, std::size_t batch_size,
                         std::uint64_t seed)
    : stream_(std::move(stream)), context_len_(context_len), batch_size_(batch_size), rng_(seed) {
  if (context_len_ == 0 || batch_size_ == 0) throw ValidationError("context_len and batch_size must be >= 1");
  if (stream_.size() <= context_len_) {
    throw InsufficientDataError("token stream of " + std::to_string(stream_.size()) +
                                " tokens is too short for context_len " + std::to_string(context_len_));
  }
}

Batch BatchStream::next() {
  Batch b;
  b.inputs.reserve(batch_size_ * context_len_);
  b.targets.reserve(batch_size_ * context_len_);
  const std::size_t starts = stream_.size() - context_len_;  // valid starts: [0, starts)
  for (std::size_t i = 0; i < batch_size_; ++i) {
    const auto s = std::min(starts - 1, static_cast<std::size_t>(uniform01(rng_) * static_cast<double>(starts)));
    for (std::size_t t = 0; t < context_len_; ++t) {
      b.inputs.push_back(stream_[s + t]);
      b.targets.push_back(stream_[s + t + 1]);
    }
  }
  return b;
}

BatchStream make_stream(std::span<const TaggedDocument> docs, const Vocabulary& vocab, std::size_t context_len,
                        std::size_t batch_size, std::uint64_t seed) {
  return BatchStream(encode_stream(docs, vocab), context_len, batch_size, seed);
}

double adam_step(nn::ParameterSet& params, AdamState& state, const TrainConfig& config) {
  if (state.m.size() != params.size()) {
    state.m.clear();
    state.v.clear();
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.m.emplace_back(params.at(i).size(), 0.0);
      state.v.emplace_back(params.at(i).size(), 0.0);
    }
  }
  double sq = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (double g : params.at(i).grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) throw DivergenceError("non-finite gradient norm at update " + std::to_string(state.t + 1));
  const double clip =
      config.grad_clip_norm > 0.0 && norm > config.grad_clip_norm ? config.grad_clip_norm / norm : 1.0;

  ++state.t;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params.at(i).data();
    auto g = params.at(i).grad();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double gj = g[j] * clip;
      m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * gj;
      v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * gj * gj;
      p[j] -= config.learning_rate * (m[j] / c1) / (std::sqrt(v[j] / c2) + config.eps);
    }
  }
  return norm;
}

std::string TrainReport::loss_log() const {
  std::string out;
  char buf[64];
  for (const auto& e : log) {
    std::snprintf(buf, sizeof buf, "%zu\t%.17g\n", e.step, e.loss);
    out += buf;
  }
  return out;
}

TrainReport train(Model& model, std::span<const TaggedDocument> docs, const TrainConfig& config,
                  const std::filesystem::path& out, const StepCallback& on_step) {
  config.validate();
  if (docs.empty()) throw EmptyCorpusError("no training documents");
  if (config.context_len > model.context_len()) {
    throw ValidationError("training context_len " + std::to_string(config.context_len) +
                          " exceeds the model's context_len " + std::to_string(model.context_len()));
  }
  const std::size_t B = config.batch_size;
  const std::size_t T = config.context_len;
  const std::uint64_t resumed = model.meta.steps;
  const std::vector<TokenId> tokens = encode_stream(docs, model.vocab());
  BatchStream stream(tokens, T, B, mix_seed(config.seed, 1, resumed));
  std::mt19937_64 dropout_rng(mix_seed(config.seed, 2, resumed));
  AdamState adam;
  nn::ParameterSet& params = model.params();
  model.meta.seed = config.seed;

  TrainReport report;
  report.checkpoint_path = out;
  const auto t0 = std::chrono::steady_clock::now();
  auto save = [&] {
    if (!out.empty()) model.save(out);
  };

  for (std::size_t step = 0; step < config.max_steps; ++step) {
    const auto s0 = std::chrono::steady_clock::now();
    const Batch batch = stream.next();
    params.zero_grad();
    Tape tape;
    Var logits = model.forward(tape, nn::trainable(tape, params), batch.inputs, B, T, &dropout_rng);
    Var loss = nn::cross_entropy(logits, batch.targets);
    const double loss_value = loss.value()[0];
    if (!std::isfinite(loss_value)) {
      throw DivergenceError("loss became non-finite at step " + std::to_string(model.meta.steps + 1));
    }
    tape.backward(loss);
    adam_step(params, adam, config);

    ++model.meta.steps;
    model.meta.final_loss = loss_value;
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - s0).count();
    LogEntry entry{static_cast<std::size_t>(model.meta.steps), loss_value,
                   dt > 0.0 ? static_cast<double>(B * T) / dt : 0.0};
    report.log.push_back(entry);
    if (on_step) on_step(entry);

    if (config.checkpoint_every > 0 && (step + 1) % config.checkpoint_every == 0) save();
    if (config.eval_every > 0 && (step + 1) % config.eval_every == 0 &&
        score_stream(model, tokens).cross_entropy() < config.target_loss) {
      report.reached_target = true;
      break;
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) params.at(i).drop_grad();
  save();

  report.total_steps = model.meta.steps;
  report.steps_this_run = model.meta.steps - resumed;
  report.final_loss = model.meta.final_loss;
  report.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

nn::Model init_model(const nn::ModelConfig& config, VocabMode mode, std::size_t min_freq,
                     std::span<const TaggedDocument> docs, std::uint64_t seed) {
  return Model::create(config, Vocabulary::build(docs, mode, min_freq), mix_seed(seed, 0));
}

double StreamScore::perplexity() const { return std::exp(cross_entropy()); }

StreamScore score_stream(const Model& model, std::span<const TokenId> stream) {
  if (stream.size() < 2) throw EmptyCorpusError("need at least two tokens to score a stream");
  const std::size_t n = stream.size();
  const std::size_t V = model.vocab_size();
  const std::size_t ctx = model.context_len();
  StreamScore score;

  if (model.kind() == nn::ModelKind::lstm) {
    const auto& config = std::get<nn::LSTMConfig>(model.config());
    nn::LSTMState state = nn::LSTMState::zeros(config, 1);
    for (std::size_t s = 0; s + 1 < n; s += ctx) {
      const std::size_t len = std::min(ctx, n - 1 - s);
      std::vector<std::size_t> in(stream.begin() + s, stream.begin() + s + len);
      Tape tape(false);
      auto out = nn::lstm_forward(config, nn::frozen(tape, model.params()), in, 1, len, &state);
      state = std::move(out.final);
      const double* z = out.logits.value().data().data();
      for (std::size_t j = 0; j < len; ++j) {
        score.total_nll += row_nll(z + j * V, V, stream[s + j + 1]);
        ++score.tokens;
      }
    }
    return score;
  }

  const std::size_t stride = std::max<std::size_t>(1, ctx / 2);
  std::size_t scored = 0;  // stream positions [1, scored] already carry a score
  for (std::size_t s = 0; scored < n - 1; s += stride) {
    const std::size_t len = std::min(ctx, n - 1 - s);
    std::vector<std::size_t> in(stream.begin() + s, stream.begin() + s + len);
    Tape tape(false);
    const nn::Tensor& z = model.forward(tape, nn::frozen(tape, model.params()), in, 1, len).value();
    for (std::size_t j = 0; j < len; ++j) {
      const std::size_t target_pos = s + j + 1;
      if (target_pos <= scored) continue;
      score.total_nll += row_nll(z.data().data() + j * V, V, stream[target_pos]);
      ++score.tokens;
      scored = target_pos;
    }
  }
  return score;
}

double stream_cross_entropy(const Model& model, std::span<const TaggedDocument> docs) {
  if (docs.empty()) throw EmptyCorpusError("no documents to score");
  return score_stream(model, encode_stream(docs, model.vocab())).cross_entropy();
}

double perplexity(const Model& model, std::span<const TaggedDocument> docs) {
  return std::exp(stream_cross_entropy(model, docs));
}

}  // namespace recipegen
