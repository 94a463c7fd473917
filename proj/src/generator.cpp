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

#include "recipegen/generator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "recipegen/errors.hpp"
#include "recipegen/rng.hpp"
#include "recipegen/special_tokens.hpp"

namespace recipegen {

namespace {

std::string_view section_name(Section s) {
  switch (s) {
    case Section::ingredients:
      return "ingredients";
    case Section::title:
      return "title";
    case Section::instructions:
      return "instructions";
  }
  return "";
}

TokenId argmax(std::span<const double> logits) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[best]) best = i;
  }
  return static_cast<TokenId>(best);
}

}  // namespace

void SamplingParams::validate() const {
  if (!std::isfinite(temperature) || temperature < 0.0) throw ValidationError("temperature must be >= 0");
  if (max_new_tokens == 0) throw ValidationError("max_new_tokens must be >= 1");
}

std::string_view to_string(FinishReason reason) {
  return reason == FinishReason::end_tag ? "end-tag" : "length-limit";
}

std::string prompt_ingredient(std::string_view ingredient) {
  const std::string text = collapse_whitespace(ingredient);
  if (text.empty()) throw ValidationError("ingredients must be nonempty after trimming");
  if (contains_special(text)) throw ValidationError("ingredient '" + text + "' contains a reserved token");
  return normalize_numbers(render_ingredient(parse_ingredient(text)));
}

std::string prompt_text(std::span<const std::string> ingredients) {
  if (ingredients.empty()) throw ValidationError("at least one ingredient is required");
  std::string out;
  out += tags::recipe_start;
  out += ' ';
  out += tags::ingr_start;
  for (std::size_t i = 0; i < ingredients.size(); ++i) {
    out += ' ';
    if (i) {
      out += tags::next_ingr;
      out += ' ';
    }
    out += prompt_ingredient(ingredients[i]);
  }
  out += ' ';
  out += tags::ingr_end;
  out += ' ';
  out += tags::title_start;
  return out;
}

std::vector<TokenId> build_prompt(std::span<const std::string> ingredients, const Vocabulary& vocab) {
  return vocab.encode(prompt_text(ingredients));
}

TokenId sample_next(std::span<const double> logits, const SamplingParams& params, std::mt19937_64& rng) {
  if (logits.empty()) throw ValidationError("cannot sample from empty logits");
  for (double z : logits) {
    if (!std::isfinite(z)) throw NanError("non-finite logit");
  }
  if (params.temperature == 0.0 || params.top_k == 1) return argmax(logits);

  std::vector<std::size_t> kept(logits.size());
  std::iota(kept.begin(), kept.end(), std::size_t{0});
  if (params.top_k > 0 && params.top_k < logits.size()) {
    const auto by_rank = [&](std::size_t a, std::size_t b) {
      return logits[a] > logits[b] || (logits[a] == logits[b] && a < b);
    };
    std::nth_element(kept.begin(), kept.begin() + static_cast<std::ptrdiff_t>(params.top_k) - 1, kept.end(),
                     by_rank);
    kept.resize(params.top_k);
    std::sort(kept.begin(), kept.end());
  }
  double mx = -std::numeric_limits<double>::infinity();
  for (auto i : kept) mx = std::max(mx, logits[i] / params.temperature);
  std::vector<double> weights(kept.size());
  double total = 0.0;
  for (std::size_t j = 0; j < kept.size(); ++j) {
    weights[j] = std::exp(logits[kept[j]] / params.temperature - mx);
    total += weights[j];
  }
  const double u = uniform01(rng) * total;
  double cumulative = 0.0;
  for (std::size_t j = 0; j < kept.size(); ++j) {
    cumulative += weights[j];
    if (u < cumulative) return static_cast<TokenId>(kept[j]);
  }
  return static_cast<TokenId>(kept.back());
}

GeneratedRecipe generate(const nn::Model& model, std::span<const std::string> ingredients,
                         const SamplingParams& params, std::string model_id) {
  params.validate();
  const Vocabulary& vocab = model.vocab();
  const std::size_t config_vocab = std::visit([](const auto& c) { return c.vocab_size; }, model.config());
  if (config_vocab != vocab.size()) throw CompatibilityError("model and vocabulary sizes disagree");
  const auto end_id = vocab.find(tags::recipe_end);
  if (!end_id) throw CompatibilityError("vocabulary lacks the recipe-end tag");

  std::vector<TokenId> ids = build_prompt(ingredients, vocab);
  const std::size_t prompt_len = ids.size();
  auto state = model.start_decoding();
  std::mt19937_64 rng(params.seed);

  GeneratedRecipe out;
  out.params = params;
  out.model_id = std::move(model_id);
  std::vector<double> logits = state->feed(ids);
  while (true) {
    const TokenId next = sample_next(logits, params, rng);
    ids.push_back(next);
    if (next == *end_id) {
      out.finish_reason = FinishReason::end_tag;
      break;
    }
    if (ids.size() - prompt_len >= params.max_new_tokens) {
      out.finish_reason = FinishReason::length_limit;
      break;
    }
    logits = state->feed(std::span(&ids.back(), 1));
  }
  out.tokens_generated = ids.size() - prompt_len;
  out.raw_text = vocab.decode(ids);

  const ParseResult parsed = parse(out.raw_text);
  out.parsed = parsed.record;
  out.malformed = parsed.malformed;
  out.recovered = parsed.recovered;
  return out;
}

std::string to_json(const GeneratedRecipe& r, int indent) {
  nlohmann::ordered_json j;
  j["title"] = r.parsed.title;
  auto ingredients = nlohmann::json::array();
  for (const auto& line : r.parsed.ingredients) ingredients.push_back(render_ingredient(line));
  j["ingredients"] = ingredients;
  j["instructions"] = r.parsed.instructions;
  j["raw_text"] = r.raw_text;
  j["malformed"] = r.malformed;
  auto recovered = nlohmann::json::array();
  for (auto s : r.recovered) recovered.push_back(section_name(s));
  j["recovered_sections"] = recovered;
  j["finish_reason"] = to_string(r.finish_reason);
  j["tokens_generated"] = r.tokens_generated;
  j["params"] = {{"temperature", r.params.temperature},
                 {"top_k", r.params.top_k},
                 {"max_new_tokens", r.params.max_new_tokens},
                 {"seed", r.params.seed}};
  j["model"] = r.model_id;
  return j.dump(indent, ' ', false, nlohmann::json::error_handler_t::replace);
}

std::string to_text(const GeneratedRecipe& r) {
  std::ostringstream os;
  os << (r.parsed.title.empty() ? "(untitled)" : r.parsed.title) << "\n\nIngredients:\n";
  for (const auto& line : r.parsed.ingredients) os << "  - " << render_ingredient(line) << '\n';
  os << "\nInstructions:\n";
  for (std::size_t i = 0; i < r.parsed.instructions.size(); ++i) {
    os << "  " << i + 1 << ". " << r.parsed.instructions[i] << '\n';
  }
  os << "\n[" << to_string(r.finish_reason) << ", " << r.tokens_generated << " tokens, seed " << r.params.seed;
  if (r.malformed) os << ", malformed";
  os << "]\n";
  if (r.malformed) os << "\nRaw text:\n" << r.raw_text << '\n';
  return os.str();
}

}  // namespace recipegen
