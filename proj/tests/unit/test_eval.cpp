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

#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "recipegen/corpus.hpp"
#include "recipegen/errors.hpp"
#include "recipegen/eval.hpp"
#include "recipegen/synthetic.hpp"
#include "recipegen/trainer.hpp"

using namespace recipegen;
namespace fs = std::filesystem;

namespace {

const fs::path kData = RECIPEGEN_TEST_DATA;

std::vector<RecipeRecord> toy_records() {
  return ingest(kData / "toy_recipes.jsonl", CorpusFormat::record_lines).records;
}

std::vector<TaggedDocument> docs_of(const std::vector<RecipeRecord>& records) {
  std::vector<TaggedDocument> docs;
  for (const auto& r : records) docs.push_back(serialize(r));
  return docs;
}

nn::Model random_lstm(const std::vector<TaggedDocument>& docs, std::uint64_t seed) {
  nn::LSTMConfig c;
  c.embed_dim = 8;
  c.hidden_dim = 16;
  return init_model(c, VocabMode::character, 1, docs, seed);
}

}  // namespace

TEST_CASE("candidate and reference text") {
  const auto r = toy_records()[1];
  GeneratedRecipe g;
  g.parsed = r;
  g.parsed.id.clear();
  CHECK(candidate_text(g) == reference_text(r));
  CHECK(reference_text(r) == "Sweet Rice 1 cup rice 1/4 cup honey Boil the rice. Stir in honey.");
  g.malformed = true;
  g.raw_text = "<RECIPE_START> <INGR_START> <F_1_4> cup honey <INGR_END> <TITLE_START> Swe";
  CHECK(candidate_text(g) == "1/4 cup honey Swe");
}

TEST_CASE("random checkpoint scores near zero on 20 recipes") {
  SynthOptions o;
  o.total = 20;
  o.duplicates = 0;
  o.incomplete = 0;
  o.overlength = 0;
  o.short_docs = 0;
  o.seed = 8;
  const auto records = synthesize_corpus(o).records;
  const auto m = random_lstm(docs_of(records), 3);
  const std::vector<EvalModel> models = {{"random", &m}};
  SamplingParams p;
  p.seed = 1;
  p.max_new_tokens = 300;
  const auto report = eval_harness(models, records, p);
  REQUIRE(report.rows.size() == 1);
  CHECK(report.rows[0].samples.size() == 20);
  CAPTURE(report.rows[0].corpus.score);
  CHECK(report.rows[0].corpus.score < 0.05);
}

TEST_CASE("failed generations count as empty candidates with a note") {
  auto records = toy_records();
  const auto m = random_lstm(docs_of(records), 1);
  records[0].ingredients[0].name = "bread <RECIPE_END>";
  const std::vector<EvalModel> models = {{"m", &m}};
  SamplingParams p;
  p.max_new_tokens = 30;
  const auto report = eval_harness(models, std::span(records).first(3), p);
  const auto& row = report.rows[0];
  CHECK(row.failures == 1);
  CHECK(row.samples[0].generation_failed);
  CHECK(row.samples[0].sentence_bleu == 0.0);
  CHECK(row.samples[0].note.find("generation failed") == 0);
  CHECK(row.samples[1].note.find("malformed") == 0);
}

TEST_CASE("report layout and determinism") {
  const auto records = toy_records();
  const auto a = random_lstm(docs_of(records), 1);
  const auto b = random_lstm(docs_of(records), 2);
  const std::vector<EvalModel> models = {{"char-lstm-a", &a}, {"char-lstm-b", &b}};
  SamplingParams p;
  p.max_new_tokens = 40;
  p.seed = 11;
  const auto r1 = eval_harness(models, records, p, Smoothing::none);
  const auto r2 = eval_harness(models, records, p, Smoothing::none);
  CHECK(r1.render() == r2.render());

  const auto table = r1.table();
  CHECK(table.rfind("Model | BLEU Score\n", 0) == 0);
  CHECK(table.find("char-lstm-a | 0.") != std::string::npos);
  CHECK(table.find("char-lstm-b | 0.") != std::string::npos);

  const auto j = nlohmann::json::parse(r1.json());
  CHECK(j["metric"]["smoothing"] == "none");
  CHECK(j["metric"]["max_n"] == 4);
  CHECK(j["sampling"]["seed"] == 11);
  REQUIRE(j["models"].size() == 2);
  CHECK(j["models"][0]["model"] == "char-lstm-a");
  CHECK(j["models"][0]["precisions"].size() == 4);
  CHECK(j["models"][0]["counts"].size() == 4);
  CHECK(j["models"][0]["samples"] == 10);
  CHECK(j["models"][0].contains("brevity_penalty"));
  CHECK(j["models"][0].contains("candidate_length"));
  CHECK(j["models"][0].contains("reference_length"));
}

TEST_CASE("errors") {
  const auto records = toy_records();
  const auto m = random_lstm(docs_of(records), 1);
  const std::vector<EvalModel> models = {{"m", &m}};
  std::vector<RecipeRecord> none;
  CHECK_THROWS_AS(eval_harness(models, none, SamplingParams{}), EmptyCorpusError);
  const std::vector<EvalModel> unloaded = {{"x", nullptr}};
  CHECK_THROWS_AS(eval_harness(unloaded, records, SamplingParams{}), ValidationError);
}
