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
#include <span>
#include <string>
#include <vector>

#include "recipegen/bleu.hpp"
#include "recipegen/checkpoint.hpp"
#include "recipegen/corpus.hpp"
#include "recipegen/generator.hpp"

namespace recipegen {

struct EvalModel {
  std::string id;
  const nn::Model* model = nullptr;
};

struct EvalSample {
  std::string record_id;
  std::string candidate;  // tag-free text scored against the reference
  std::string reference;
  double sentence_bleu = 0.0;
  bool generation_failed = false;
  std::string note;
};

struct ModelScore {
  std::string model_id;
  BleuScore corpus;
  std::vector<EvalSample> samples;
  std::size_t failures = 0;
};

struct BleuReport {
  std::vector<ModelScore> rows;
  SamplingParams params;

  /// "Model | BLEU Score" rows with three decimals.
  std::string table() const;
  /// All component statistics as JSON.
  std::string json() const;
  /// table(), the protocol line and the JSON block.
  std::string render() const;
};

/// Text the harness scores for a generation: the flattened parsed record
/// when the parse is clean, otherwise the raw text without tags.
std::string candidate_text(const GeneratedRecipe& recipe);

/// Title, rendered ingredient lines and instruction steps joined by spaces.
std::string reference_text(const RecipeRecord& record);

/// Prompts every model with each held-out record's ingredients and scores
/// the generations with corpus BLEU. Record i is sampled with seed
/// params.seed + i. A failed generation is scored as an empty candidate and
/// noted; the harness continues. Throws EmptyCorpusError without records.
BleuReport eval_harness(std::span<const EvalModel> models, std::span<const RecipeRecord> heldout,
                        const SamplingParams& params, Smoothing smoothing = Smoothing::add_one);

}  // namespace recipegen
