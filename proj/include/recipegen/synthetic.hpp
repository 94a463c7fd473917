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
#include <string>
#include <vector>

#include "recipegen/corpus.hpp"

namespace recipegen {

struct SynthOptions {
  std::size_t total = 1000;
  std::size_t duplicates = 30;
  std::size_t incomplete = 20;
  std::size_t overlength = 10;  // serialized length above 2000 chars
  std::size_t short_docs = 15;  // serialized length below 220 chars
  std::uint64_t seed = 1;
};

/// A generated corpus together with the ids of every planted defect.
/// Regular records serialize to 600..1400 chars.
struct SynthCorpus {
  std::vector<RecipeRecord> records;
  std::vector<std::string> duplicate_ids;
  std::vector<std::string> incomplete_ids;
  std::vector<std::string> overlength_ids;
  std::vector<std::string> short_ids;
};

/// Deterministic in the seed. Duplicates repeat an earlier regular record
/// under a new id with the title's letter case changed; incomplete records
/// have an empty title, ingredient list, instruction list or step. Throws
/// ValidationError when the planted counts exceed `total`.
SynthCorpus synthesize_corpus(const SynthOptions& options = {});

}  // namespace recipegen
