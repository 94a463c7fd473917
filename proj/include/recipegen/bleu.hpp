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
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace recipegen {

using Ngram = std::vector<std::string>;
using NgramCounts = std::map<Ngram, std::size_t>;

/// Contiguous n-grams with multiplicities; empty when tokens.size() < n.
/// Throws ValidationError for n == 0.
NgramCounts ngram_counts(std::span<const std::string> tokens, std::size_t n);

/// Clipped matches over candidate n-gram total, kept as exact integers.
struct Precision {
  std::uint64_t matches = 0;
  std::uint64_t total = 0;
  bool operator==(const Precision&) const = default;
};

Precision modified_precision(std::span<const std::string> candidate,
                             std::span<const std::vector<std::string>> references, std::size_t n);

enum class Smoothing { none, add_one };

std::string_view to_string(Smoothing smoothing);
Smoothing parse_smoothing(std::string_view name);

struct EvalPair {
  std::string candidate;
  std::vector<std::string> references;
};

struct BleuScore {
  double score = 0.0;
  std::vector<Precision> counts;  // raw clipped counts per order 1..max_n
  std::vector<double> precisions;  // p_n after smoothing
  double brevity_penalty = 0.0;
  std::size_t candidate_length = 0;  // c
  std::size_t reference_length = 0;  // effective r
  bool empty_candidate = false;
  std::size_t max_n = 4;
  Smoothing smoothing = Smoothing::add_one;
};

/// Reference length closest to c; ties go to the shorter reference.
std::size_t effective_reference_length(std::size_t c, std::span<const std::vector<std::string>> references);

/// Sentence BLEU over whitespace tokens with uniform weights 1/max_n.
/// Add-one smoothing replaces m/t by (m+1)/(t+1) for orders with no match;
/// without smoothing any such order makes the score 0. An empty candidate
/// scores 0 with brevity penalty 0. Throws ValidationError when there are no
/// references.
BleuScore bleu(const EvalPair& pair, std::size_t max_n = 4, Smoothing smoothing = Smoothing::add_one);

/// Pools clipped matches, totals, c and r over all pairs before applying the
/// formula once. Throws EmptyCorpusError for no pairs.
BleuScore corpus_bleu(std::span<const EvalPair> pairs, std::size_t max_n = 4,
                      Smoothing smoothing = Smoothing::add_one);

}  // namespace recipegen
