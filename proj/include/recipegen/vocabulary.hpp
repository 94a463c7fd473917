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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "recipegen/corpus.hpp"

namespace recipegen {

using TokenId = std::uint32_t;

enum class VocabMode { character, word };

std::string_view to_string(VocabMode mode);
VocabMode parse_vocab_mode(std::string_view name);

/// Token <-> id bijection. Special tokens always hold ids
/// [0, special_tokens().size()) and are matched atomically by encode().
///
/// Character mode splits on UTF-8 code points and decode() is the plain
/// concatenation of tokens. Word mode splits on whitespace and decode()
/// joins tokens with single spaces, which reproduces the tagged grammar
/// exactly.
class Vocabulary {
 public:
  Vocabulary() = default;

  /// Specials first, then tokens by descending frequency with ties broken
  /// lexicographically. Word-mode tokens below `min_freq` are left out.
  static Vocabulary build(std::span<const TaggedDocument> docs, VocabMode mode,
                          std::size_t min_freq = 1);

  std::vector<TokenId> encode(std::string_view text) const;

  /// Throws RangeError for ids >= size().
  std::string decode(std::span<const TokenId> ids) const;

  /// Splits text into tokens without mapping to ids.
  std::vector<std::string> tokenize(std::string_view text) const;

  std::optional<TokenId> find(std::string_view token) const;
  /// Throws RangeError when `token` is not in the vocabulary.
  TokenId id(std::string_view token) const;
  const std::string& token(TokenId id) const;

  std::size_t size() const { return id_to_token_.size(); }
  VocabMode mode() const { return mode_; }
  std::size_t min_freq() const { return min_freq_; }
  TokenId unk_id() const { return 1; }
  TokenId pad_id() const { return 0; }
  TokenId eos_id() const { return 2; }

  /// Versioned text form: a header line then one `id<TAB>token` line per
  /// entry, tokens escaped with \t \n \\.
  std::string to_text() const;
  static Vocabulary from_text(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  /// Hash of to_text(), hex.
  std::string content_hash() const;

  bool operator==(const Vocabulary& other) const {
    return mode_ == other.mode_ && min_freq_ == other.min_freq_ && id_to_token_ == other.id_to_token_;
  }

 private:
  explicit Vocabulary(VocabMode mode, std::size_t min_freq, std::vector<std::string> tokens);

  VocabMode mode_ = VocabMode::character;
  std::size_t min_freq_ = 1;
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, TokenId> token_to_id_;
};

}  // namespace recipegen
