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

#include "recipegen/eval.hpp"

#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "recipegen/errors.hpp"

namespace recipegen {

namespace {

nlohmann::ordered_json score_json(const BleuScore& s) {
  nlohmann::ordered_json j;
  j["bleu"] = s.score;
  j["precisions"] = s.precisions;
  auto counts = nlohmann::ordered_json::array();
  for (const auto& p : s.counts) counts.push_back({{"matches", p.matches}, {"total", p.total}});
  j["counts"] = counts;
  j["brevity_penalty"] = s.brevity_penalty;
  j["candidate_length"] = s.candidate_length;
  j["reference_length"] = s.reference_length;
  j["empty_candidate"] = s.empty_candidate;
  return j;
}

}  // namespace

std::string candidate_text(const GeneratedRecipe& recipe) {
  return recipe.malformed ? strip_tags(recipe.raw_text) : flatten_record(recipe.parsed);
}

std::string reference_text(const RecipeRecord& record) { return flatten_record(canonical_record(record)); }

BleuReport eval_harness(std::span<const EvalModel> models, std::span<const RecipeRecord> heldout,
                        const SamplingParams& params, Smoothing smoothing) {
  if (heldout.empty()) throw EmptyCorpusError("no held-out records to evaluate");
  BleuReport report;
  report.params = params;
  for (const auto& m : models) {
    if (!m.model) throw ValidationError("model '" + m.id + "' is not loaded");
    ModelScore row;
    row.model_id = m.id;
    std::vector<EvalPair> pairs;
    for (std::size_t i = 0; i < heldout.size(); ++i) {
      const RecipeRecord& record = heldout[i];
      EvalSample sample;
      sample.record_id = record.id;
      sample.reference = reference_text(record);
      std::vector<std::string> ingredients;
      for (const auto& line : canonical_record(record).ingredients) ingredients.push_back(render_ingredient(line));
      SamplingParams p = params;
      p.seed = params.seed + i;
      try {
        const GeneratedRecipe g = generate(*m.model, ingredients, p, m.id);
        sample.candidate = candidate_text(g);
        if (g.malformed) sample.note = "malformed generation scored as tag-stripped text";
      } catch (const Error& e) {
        sample.generation_failed = true;
        sample.note = std::string("generation failed: ") + e.what();
        ++row.failures;
      }
      EvalPair pair{sample.candidate, {sample.reference}};
      sample.sentence_bleu = bleu(pair, 4, smoothing).score;
      pairs.push_back(std::move(pair));
      row.samples.push_back(std::move(sample));
    }
    row.corpus = corpus_bleu(pairs, 4, smoothing);
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string BleuReport::table() const {
  std::ostringstream os;
  os << "Model | BLEU Score\n";
  os << "----- | ----------\n";
  char buf[32];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.3f", r.corpus.score);
    os << r.model_id << " | " << buf << '\n';
  }
  return os.str();
}

std::string BleuReport::json() const {
  nlohmann::ordered_json j;
  j["metric"] = {{"name", "BLEU"},
                 {"max_n", rows.empty() ? 4 : rows.front().corpus.max_n},
                 {"weights", "uniform"},
                 {"tokenization", "whitespace"},
                 {"smoothing", rows.empty() ? "add-one" : std::string(to_string(rows.front().corpus.smoothing))},
                 {"aggregation", "micro-averaged corpus"}};
  j["sampling"] = {{"temperature", params.temperature},
                   {"top_k", params.top_k},
                   {"max_new_tokens", params.max_new_tokens},
                   {"seed", params.seed}};
  auto models = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    auto m = score_json(r.corpus);
    m["model"] = r.model_id;
    m["samples"] = r.samples.size();
    m["failures"] = r.failures;
    auto per = nlohmann::ordered_json::array();
    for (const auto& s : r.samples) {
      nlohmann::ordered_json e{{"record_id", s.record_id}, {"sentence_bleu", s.sentence_bleu}};
      if (!s.note.empty()) e["note"] = s.note;
      per.push_back(std::move(e));
    }
    m["per_sample"] = per;
    models.push_back(std::move(m));
  }
  j["models"] = models;
  return j.dump(2, ' ', false, nlohmann::json::error_handler_t::replace);
}

std::string BleuReport::render() const {
  std::ostringstream os;
  os << table() << '\n';
  const auto smoothing = rows.empty() ? Smoothing::add_one : rows.front().corpus.smoothing;
  os << "BLEU-4, uniform weights, whitespace tokens, " << to_string(smoothing)
     << " smoothing, micro-averaged over the held-out set.\n\n";
  os << json() << '\n';
  return os.str();
}

}  // namespace recipegen
