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
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "recipegen/checkpoint.hpp"
#include "recipegen/corpus.hpp"
#include "recipegen/vocabulary.hpp"

namespace recipegen {

struct SamplingParams {
  double temperature = 0.8;  // 0 selects greedy argmax
  std::size_t top_k = 40;    // 0 disables the cut
  std::size_t max_new_tokens = 1024;
  std::uint64_t seed = 0;

  /// Throws ValidationError for negative or non-finite temperature or
  /// max_new_tokens == 0.
  void validate() const;
  bool operator==(const SamplingParams&) const = default;
};

enum class FinishReason { end_tag, length_limit };

std::string_view to_string(FinishReason reason);

struct GeneratedRecipe {
  std::string raw_text;  // prompt plus completion, as decoded by the vocabulary
  RecipeRecord parsed;   // best effort when malformed
  bool malformed = false;
  std::vector<Section> recovered;
  FinishReason finish_reason = FinishReason::length_limit;
  std::size_t tokens_generated = 0;
  SamplingParams params;
  std::string model_id;
};

/// Ingredient payload as it appears in a tagged document: parsed into
/// quantity, unit and name, re-rendered, then number-normalized.
std::string prompt_ingredient(std::string_view ingredient);

/// "<RECIPE_START> <INGR_START> a <NEXT_INGR> b <INGR_END> <TITLE_START>".
/// Throws ValidationError for an empty list, a blank ingredient or one
/// containing a reserved token.
std::string prompt_text(std::span<const std::string> ingredients);
std::vector<TokenId> build_prompt(std::span<const std::string> ingredients, const Vocabulary& vocab);

/// Temperature 0 (or top_k 1) returns the argmax with the lowest id winning
/// ties. Otherwise samples from softmax(logits / temperature) restricted to
/// the top_k largest logits, ties at the cut going to lower ids. Consumes
/// exactly one draw from `rng` when sampling. Throws NanError on non-finite
/// logits.
TokenId sample_next(std::span<const double> logits, const SamplingParams& params, std::mt19937_64& rng);

/// Extends the prompt one token at a time until the recipe-end tag or
/// max_new_tokens, then parses the text. Deterministic for a fixed seed.
GeneratedRecipe generate(const nn::Model& model, std::span<const std::string> ingredients,
                         const SamplingParams& params, std::string model_id = {});

/// Structured object with title, ingredients, instructions, raw_text,
/// malformed, recovered_sections, finish_reason, tokens_generated, params
/// and model.
std::string to_json(const GeneratedRecipe& recipe, int indent = -1);

/// Human-readable recipe card.
std::string to_text(const GeneratedRecipe& recipe);

}  // namespace recipegen
