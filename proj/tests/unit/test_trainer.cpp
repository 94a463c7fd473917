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

#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "doctest.h"
#include "recipegen/checkpoint.hpp"
#include "recipegen/corpus.hpp"
#include "recipegen/errors.hpp"
#include "recipegen/trainer.hpp"

using namespace recipegen;
namespace fs = std::filesystem;

namespace {

const fs::path kData = RECIPEGEN_TEST_DATA;

std::vector<TaggedDocument> toy_docs() {
  PrepOptions opts;
  opts.merge = false;
  return prepare(ingest(kData / "toy_recipes.jsonl", CorpusFormat::record_lines), opts).docs;
}

nn::LSTMConfig small_lstm() {
  nn::LSTMConfig c;
  c.embed_dim = 8;
  c.hidden_dim = 16;
  c.context_len = 32;
  return c;
}

nn::TransformerConfig small_transformer() {
  nn::TransformerConfig c;
  c.d_model = 16;
  c.n_heads = 2;
  c.n_layers = 1;
  c.ff_dim = 32;
  c.context_len = 32;
  c.dropout_rate = 0.1;
  return c;
}

TrainConfig quick(std::size_t steps) {
  TrainConfig t;
  t.batch_size = 4;
  t.context_len = 32;
  t.learning_rate = 0.01;
  t.max_steps = steps;
  t.seed = 42;
  return t;
}

nn::ParameterSet scalar_param(double value) {
  const std::vector<nn::ParamSpec> spec = {{"w", {1}}};
  nn::ParameterSet p(spec);
  p.at(0)[0] = value;
  return p;
}

double log_softmax_at(const std::vector<double>& z, std::size_t k) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : z) mx = std::max(mx, x);
  double s = 0;
  for (double x : z) s += std::exp(x - mx);
  return z[k] - mx - std::log(s);
}

fs::path temp_path(const std::string& name) { return fs::temp_directory_path() / ("recipegen_trainer_" + name); }

}  // namespace

TEST_SUITE("run config") {
  TEST_CASE("key=value parsing with comments") {
    const auto cfg = parse_run_config(
        "# comment\nbatch_size = 3\ncontext_len=12  # trailing\nlearning_rate = 0.5\nhidden_dim = 7\n"
        "tie_weights = true\nvocab = word\n");
    CHECK(cfg.train.batch_size == 3);
    CHECK(cfg.train.context_len == 12);
    CHECK(cfg.lstm.context_len == 12);
    CHECK(cfg.transformer.context_len == 12);
    CHECK(cfg.train.learning_rate == 0.5);
    CHECK(cfg.lstm.hidden_dim == 7);
    CHECK(cfg.transformer.tie_weights);
    CHECK(cfg.transformer_vocab == VocabMode::word);
  }

  TEST_CASE("bad configurations are rejected") {
    CHECK_THROWS_AS(parse_run_config("nonsense = 1\n"), ValidationError);
    CHECK_THROWS_AS(parse_run_config("batch_size = many\n"), ValidationError);
    CHECK_THROWS_AS(parse_run_config("batch_size\n"), ValidationError);
    CHECK_THROWS_AS(parse_run_config("batch_size = 0\n"), ValidationError);
    CHECK_THROWS_AS(parse_run_config("beta1 = 1\n"), ValidationError);
    CHECK_THROWS_AS(parse_run_config("learning_rate = 0\n"), ValidationError);
  }

  TEST_CASE("shipped configs parse") {
    for (const char* name : {"default.cfg", "toy-lstm.cfg", "toy-transformer.cfg"}) {
      CHECK_NOTHROW(load_run_config(fs::path(kData).parent_path().parent_path() / "configs" / name));
    }
  }
}

TEST_SUITE("batch stream") {
  TEST_CASE("targets are inputs shifted by one") {
    BatchStream s({10, 11, 12, 13}, 3, 1, 0);
    const auto b = s.next();
    CHECK(b.inputs == std::vector<std::size_t>{10, 11, 12});
    CHECK(b.targets == std::vector<std::size_t>{11, 12, 13});
  }

  TEST_CASE("seeded and in range") {
    const auto docs = toy_docs();
    const auto vocab = Vocabulary::build(docs, VocabMode::character);
    auto a = make_stream(docs, vocab, 16, 4, 5);
    auto b = make_stream(docs, vocab, 16, 4, 5);
    auto c = make_stream(docs, vocab, 16, 4, 6);
    bool any_different = false;
    for (int i = 0; i < 20; ++i) {
      const auto x = a.next();
      const auto y = b.next();
      CHECK(x.inputs == y.inputs);
      CHECK(x.targets == y.targets);
      any_different = any_different || c.next().inputs != x.inputs;
      for (auto id : x.inputs) CHECK(id < vocab.size());
      CHECK(x.inputs.size() == 64);
    }
    CHECK(any_different);
  }

  TEST_CASE("short stream is insufficient data") {
    CHECK_THROWS_AS(BatchStream({1, 2, 3}, 3, 1, 0), InsufficientDataError);
  }
}

TEST_SUITE("adam") {
  TEST_CASE("zero gradient is a fixed point") {
    auto p = scalar_param(0.7);
    p.zero_grad();
    AdamState st;
    TrainConfig cfg;
    adam_step(p, st, cfg);
    CHECK(p.at(0)[0] == 0.7);
  }

  TEST_CASE("first two steps evaluated by hand") {
    auto p = scalar_param(0.0);
    AdamState st;
    TrainConfig cfg;
    cfg.learning_rate = 0.1;
    p.at(0).grad()[0] = 1.0;
    adam_step(p, st, cfg);
    // m = 0.1, v = 0.001; bias-corrected both are 1, so the step is lr / (1 + eps).
    CHECK(std::abs(p.at(0)[0] - (-0.1 / (1.0 + 1e-8))) < 1e-15);
    p.at(0).grad()[0] = 1.0;
    adam_step(p, st, cfg);
    CHECK(std::abs(p.at(0)[0] - (-0.2 / (1.0 + 1e-8))) < 1e-12);
    CHECK(st.t == 2);
  }

  TEST_CASE("global norm clipping rescales before the moments") {
    const std::vector<nn::ParamSpec> spec = {{"a", {1}}, {"b", {1}}};
    nn::ParameterSet p(spec);
    p.at(0).grad()[0] = 3.0;
    p.at(1).grad()[0] = 4.0;
    AdamState st;
    TrainConfig cfg;
    cfg.learning_rate = 1.0;
    cfg.eps = 1e-300;
    const double norm = adam_step(p, st, cfg);
    CHECK(norm == 5.0);
    CHECK(std::abs(st.m[0][0] - 0.1 * 0.6) < 1e-15);
    CHECK(std::abs(st.m[1][0] - 0.1 * 0.8) < 1e-15);
  }

  TEST_CASE("learning rate zero leaves parameters untouched") {
    auto p = scalar_param(1.25);
    p.at(0).grad()[0] = -2.0;
    AdamState st;
    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    adam_step(p, st, cfg);
    CHECK(p.at(0)[0] == 1.25);
  }

  TEST_CASE("non-finite gradients diverge") {
    auto p = scalar_param(0.0);
    p.at(0).grad()[0] = std::numeric_limits<double>::quiet_NaN();
    AdamState st;
    CHECK_THROWS_AS(adam_step(p, st, TrainConfig{}), DivergenceError);
  }

  TEST_CASE("deterministic") {
    auto a = scalar_param(0.3);
    auto b = scalar_param(0.3);
    AdamState sa, sb;
    for (int i = 0; i < 5; ++i) {
      a.at(0).grad()[0] = 0.1 * i - 0.2;
      b.at(0).grad()[0] = 0.1 * i - 0.2;
      adam_step(a, sa, TrainConfig{});
      adam_step(b, sb, TrainConfig{});
    }
    CHECK(a.same_values(b));
  }
}

TEST_SUITE("train") {
  TEST_CASE("same seed gives bitwise identical checkpoints for both architectures") {
    const auto docs = toy_docs();
    for (const nn::ModelConfig cfg : {nn::ModelConfig{small_lstm()}, nn::ModelConfig{small_transformer()}}) {
      auto a = init_model(cfg, VocabMode::character, 1, docs, 7);
      auto b = init_model(cfg, VocabMode::character, 1, docs, 7);
      const auto ra = train(a, docs, quick(25));
      const auto rb = train(b, docs, quick(25));
      CHECK(a.serialize() == b.serialize());
      REQUIRE(ra.log.size() == rb.log.size());
      for (std::size_t i = 0; i < ra.log.size(); ++i) CHECK(ra.log[i].loss == rb.log[i].loss);
      CHECK(ra.loss_log() == rb.loss_log());
    }
  }

  TEST_CASE("zero steps leaves the initialization") {
    const auto docs = toy_docs();
    auto m = init_model(small_lstm(), VocabMode::character, 1, docs, 3);
    const auto before = m.serialize();
    const auto r = train(m, docs, quick(0));
    CHECK(r.total_steps == 0);
    CHECK(r.log.empty());
    CHECK(m.params().same_values(nn::Model::deserialize(before).params()));
  }

  TEST_CASE("loss decreases on the toy corpus") {
    const auto docs = toy_docs();
    auto m = init_model(small_lstm(), VocabMode::character, 1, docs, 1);
    const auto r = train(m, docs, quick(400));
    REQUIRE(r.log.size() == 400);
    double head = 0, tail = 0;
    for (std::size_t i = 0; i < 100; ++i) {
      head += r.log[i].loss;
      tail += r.log[300 + i].loss;
    }
    CHECK(head > tail);
    for (std::size_t i = 0; i < r.log.size(); ++i) {
      CHECK(std::isfinite(r.log[i].loss));
      CHECK(r.log[i].step == i + 1);
    }
  }

  TEST_CASE("checkpoints are written periodically and on completion, and resume continues the count") {
    const auto docs = toy_docs();
    const auto path = temp_path("resume.ckpt");
    auto m = init_model(small_lstm(), VocabMode::character, 1, docs, 1);
    auto cfg = quick(10);
    cfg.checkpoint_every = 4;
    const auto r = train(m, docs, cfg, path);
    CHECK(r.checkpoint_path == path);
    auto loaded = nn::Model::load(path);
    CHECK(loaded.meta.steps == 10);
    CHECK(loaded.params().same_values(m.params()));
    const auto r2 = train(loaded, docs, quick(5), path);
    CHECK(r2.total_steps == 15);
    CHECK(r2.steps_this_run == 5);
    CHECK(nn::Model::load(path).meta.steps == 15);
    fs::remove(path);
  }

  TEST_CASE("divergence aborts and keeps the last good checkpoint") {
    const auto docs = toy_docs();
    const auto path = temp_path("diverge.ckpt");
    auto m = init_model(small_lstm(), VocabMode::character, 1, docs, 1);
    train(m, docs, quick(2), path);
    const auto good = read_file(path);
    m.params().get("head.b")[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(train(m, docs, quick(3), path), DivergenceError);
    CHECK(read_file(path) == good);
    fs::remove(path);
  }

  TEST_CASE("context longer than the model accepts is rejected") {
    const auto docs = toy_docs();
    auto m = init_model(small_transformer(), VocabMode::character, 1, docs, 1);
    auto cfg = quick(1);
    cfg.context_len = 64;
    CHECK_THROWS_AS(train(m, docs, cfg), ValidationError);
  }
}

TEST_SUITE("perplexity") {
  TEST_CASE("uniform logits give perplexity V") {
    const auto docs = toy_docs();
    auto m = init_model(small_lstm(), VocabMode::character, 1, docs, 1);
    auto& w = m.params().get("head.W");
    auto& b = m.params().get("head.b");
    std::fill(w.buffer().begin(), w.buffer().end(), 0.0);
    std::fill(b.buffer().begin(), b.buffer().end(), 0.0);
    const double ppl = perplexity(m, docs);
    CHECK(std::abs(ppl - static_cast<double>(m.vocab_size())) < 1e-9 * m.vocab_size());
  }

  TEST_CASE("equals exp of an independent token-by-token recomputation") {
    const auto docs = toy_docs();
    const std::vector<TaggedDocument> one = {docs[0]};
    for (const nn::ModelConfig cfg : {nn::ModelConfig{small_lstm()}, nn::ModelConfig{[] {
                                        auto c = small_transformer();
                                        c.context_len = 512;
                                        return c;
                                      }()}}) {
      const auto m = init_model(cfg, VocabMode::character, 1, docs, 9);
      const auto ids = m.vocab().encode(one[0].text);
      REQUIRE(ids.size() < 512);
      auto state = m.start_decoding();
      double nll = 0;
      for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
        const TokenId tok[] = {ids[i]};
        nll -= log_softmax_at(state->feed(tok), ids[i + 1]);
      }
      const double ce = nll / static_cast<double>(ids.size() - 1);
      const double ppl = perplexity(m, one);
      CHECK(std::abs(ppl - std::exp(ce)) <= 1e-12 * ppl);
      CHECK(ppl >= 1.0);
    }
  }

  TEST_CASE("empty input is an error") {
    const auto docs = toy_docs();
    const auto m = init_model(small_lstm(), VocabMode::character, 1, docs, 1);
    std::vector<TaggedDocument> none;
    CHECK_THROWS_AS(perplexity(m, none), EmptyCorpusError);
  }
}
