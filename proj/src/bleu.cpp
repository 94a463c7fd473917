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

#include "recipegen/bleu.hpp"

#include <algorithm>
#include <cmath>

#include "recipegen/errors.hpp"
#include "recipegen/special_tokens.hpp"

namespace recipegen {

namespace {

struct Tokenized {
  std::vector<std::string> candidate;
  std::vector<std::vector<std::string>> references;
};

Tokenized tokenize(const EvalPair& pair) {
  if (pair.references.empty()) throw ValidationError("an eval pair needs at least one reference");
  Tokenized t;
  t.candidate = split_whitespace(pair.candidate);
  for (const auto& r : pair.references) t.references.push_back(split_whitespace(r));
  return t;
}

/// Applies smoothing, the geometric mean and the brevity penalty to pooled counts.
void finish(BleuScore& s) {
  s.precisions.clear();
  if (s.candidate_length == 0) {
    s.empty_candidate = true;
    s.brevity_penalty = 0.0;
    s.score = 0.0;
    s.precisions.assign(s.max_n, 0.0);
    return;
  }
  s.brevity_penalty = s.candidate_length > s.reference_length
                          ? 1.0
                          : std::exp(1.0 - static_cast<double>(s.reference_length) /
                                               static_cast<double>(s.candidate_length));
  double log_sum = 0.0;
  bool zero = false;
  for (const auto& p : s.counts) {
    double value;
    if (p.matches == 0 && s.smoothing == Smoothing::add_one) {
      value = 1.0 / static_cast<double>(p.total + 1);
    } else if (p.matches == 0) {
      value = 0.0;
      zero = true;
    } else {
      value = static_cast<double>(p.matches) / static_cast<double>(p.total);
    }
    s.precisions.push_back(value);
    if (value > 0.0) log_sum += std::log(value);
  }
  s.score = zero ? 0.0 : s.brevity_penalty * std::exp(log_sum / static_cast<double>(s.max_n));
}

void accumulate(BleuScore& s, const Tokenized& t) {
  s.candidate_length += t.candidate.size();
  s.reference_length += effective_reference_length(t.candidate.size(), t.references);
  for (std::size_t n = 1; n <= s.max_n; ++n) {
    const Precision p = modified_precision(t.candidate, t.references, n);
    s.counts[n - 1].matches += p.matches;
    s.counts[n - 1].total += p.total;
  }
}

BleuScore empty_score(std::size_t max_n, Smoothing smoothing) {
  if (max_n == 0) throw ValidationError("BLEU order must be >= 1");
  BleuScore s;
  s.max_n = max_n;
  s.smoothing = smoothing;
  s.counts.assign(max_n, Precision{});
  return s;
}

}  // namespace

NgramCounts ngram_counts(std::span<const std::string> tokens, std::size_t n) {
  if (n == 0) throw ValidationError("n-gram order must be >= 1");
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[Ngram(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                   tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

Precision modified_precision(std::span<const std::string> candidate,
                             std::span<const std::vector<std::string>> references, std::size_t n) {
  const NgramCounts cand = ngram_counts(candidate, n);
  NgramCounts max_ref;
  for (const auto& ref : references) {
    for (const auto& [gram, count] : ngram_counts(ref, n)) {
      auto& slot = max_ref[gram];
      slot = std::max(slot, count);
    }
  }
  Precision p;
  for (const auto& [gram, count] : cand) {
    p.total += count;
    if (auto it = max_ref.find(gram); it != max_ref.end()) p.matches += std::min(count, it->second);
  }
  return p;
}

std::string_view to_string(Smoothing smoothing) { return smoothing == Smoothing::none ? "none" : "add-one"; }

Smoothing parse_smoothing(std::string_view name) {
  if (name == "none") return Smoothing::none;
  if (name == "add-one") return Smoothing::add_one;
  throw ValidationError("unknown smoothing '" + std::string(name) + "' (expected none or add-one)");
}

std::size_t effective_reference_length(std::size_t c, std::span<const std::vector<std::string>> references) {
  if (references.empty()) throw ValidationError("an eval pair needs at least one reference");
  std::size_t best = references.front().size();
  for (const auto& r : references) {
    const auto d = [c](std::size_t len) { return len > c ? len - c : c - len; };
    if (d(r.size()) < d(best) || (d(r.size()) == d(best) && r.size() < best)) best = r.size();
  }
  return best;
}

BleuScore bleu(const EvalPair& pair, std::size_t max_n, Smoothing smoothing) {
  BleuScore s = empty_score(max_n, smoothing);
  accumulate(s, tokenize(pair));
  finish(s);
  return s;
}

BleuScore corpus_bleu(std::span<const EvalPair> pairs, std::size_t max_n, Smoothing smoothing) {
  if (pairs.empty()) throw EmptyCorpusError("corpus BLEU needs at least one pair");
  BleuScore s = empty_score(max_n, smoothing);
  for (const auto& pair : pairs) accumulate(s, tokenize(pair));
  finish(s);
  return s;
}

}  // namespace recipegen
