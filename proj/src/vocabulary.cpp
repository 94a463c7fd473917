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

#include "recipegen/vocabulary.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <map>
#include <sstream>

#include "recipegen/errors.hpp"
#include "recipegen/special_tokens.hpp"

namespace recipegen {

namespace {

constexpr std::string_view kMagic = "recipegen-vocab";
constexpr int kVersion = 1;

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::vector<std::string> split_tokens(VocabMode mode, std::string_view text) {
  std::vector<std::string> out;
  std::string word;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '<') {
      if (auto s = match_special(text, i)) {
        if (!word.empty()) out.push_back(std::move(word));
        word.clear();
        out.emplace_back(*s);
        i += s->size();
        continue;
      }
    }
    if (mode == VocabMode::character) {
      const auto w = utf8_char_width(text, i);
      out.emplace_back(text.substr(i, w));
      i += w;
      continue;
    }
    if (is_space(text[i])) {
      if (!word.empty()) out.push_back(std::move(word));
      word.clear();
    } else {
      word.push_back(text[i]);
    }
    ++i;
  }
  if (!word.empty()) out.push_back(std::move(word));
  return out;
}

std::string escape_token(std::string_view t) {
  std::string out;
  for (char c : t) {
    if (c == '\t') {
      out += "\\t";
    } else if (c == '\n') {
      out += "\\n";
    } else if (c == '\\') {
      out += "\\\\";
    } else {
      out.push_back(c);
    }
  }
  return out;
}

std::string unescape_token(std::string_view t) {
  std::string out;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] != '\\') {
      out.push_back(t[i]);
      continue;
    }
    if (i + 1 >= t.size()) throw FormatError("dangling escape in vocabulary token");
    const char n = t[++i];
    if (n == 't') {
      out.push_back('\t');
    } else if (n == 'n') {
      out.push_back('\n');
    } else if (n == '\\') {
      out.push_back('\\');
    } else {
      throw FormatError("unknown escape in vocabulary token");
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(VocabMode mode) { return mode == VocabMode::character ? "char" : "word"; }

VocabMode parse_vocab_mode(std::string_view name) {
  if (name == "char" || name == "character") return VocabMode::character;
  if (name == "word") return VocabMode::word;
  throw ValidationError("unknown vocabulary mode '" + std::string(name) + "'");
}

Vocabulary::Vocabulary(VocabMode mode, std::size_t min_freq, std::vector<std::string> tokens)
    : mode_(mode), min_freq_(min_freq), id_to_token_(std::move(tokens)) {
  for (std::size_t i = 0; i < id_to_token_.size(); ++i) {
    if (!token_to_id_.emplace(id_to_token_[i], static_cast<TokenId>(i)).second) {
      throw FormatError("duplicate vocabulary token '" + id_to_token_[i] + "'");
    }
  }
}

Vocabulary Vocabulary::build(std::span<const TaggedDocument> docs, VocabMode mode,
                             std::size_t min_freq) {
  if (docs.empty()) throw EmptyCorpusError("cannot build a vocabulary from no documents");
  const auto& specials = special_tokens();
  std::map<std::string, std::size_t> counts;
  for (const auto& d : docs) {
    for (auto& t : split_tokens(mode, d.text)) ++counts[std::move(t)];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [tok, n] : counts) {
    if (std::find(specials.begin(), specials.end(), tok) != specials.end()) continue;
    if (mode == VocabMode::word && n < min_freq) continue;
    ranked.emplace_back(tok, n);
  }
  // counts is already lexicographic, so a stable sort on frequency keeps ties in order.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens(specials.begin(), specials.end());
  for (auto& [tok, n] : ranked) tokens.push_back(tok);
  return Vocabulary(mode, mode == VocabMode::word ? min_freq : 1, std::move(tokens));
}

std::vector<std::string> Vocabulary::tokenize(std::string_view text) const {
  return split_tokens(mode_, text);
}

std::vector<TokenId> Vocabulary::encode(std::string_view text) const {
  std::vector<TokenId> ids;
  for (const auto& t : split_tokens(mode_, text)) {
    auto it = token_to_id_.find(t);
    ids.push_back(it == token_to_id_.end() ? unk_id() : it->second);
  }
  return ids;
}

std::string Vocabulary::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= id_to_token_.size()) {
      throw RangeError("token id " + std::to_string(ids[i]) + " out of range for vocabulary of " +
                       std::to_string(id_to_token_.size()));
    }
    if (mode_ == VocabMode::word && i) out.push_back(' ');
    out += id_to_token_[ids[i]];
  }
  return out;
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  if (it == token_to_id_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::id(std::string_view token) const {
  if (auto i = find(token)) return *i;
  throw RangeError("token '" + std::string(token) + "' not in vocabulary");
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= id_to_token_.size()) throw RangeError("token id " + std::to_string(id) + " out of range");
  return id_to_token_[id];
}

std::string Vocabulary::to_text() const {
  std::ostringstream os;
  os << kMagic << ' ' << kVersion << " mode=" << to_string(mode_) << " size=" << size()
     << " min_freq=" << min_freq_ << '\n';
  for (std::size_t i = 0; i < id_to_token_.size(); ++i) {
    os << i << '\t' << escape_token(id_to_token_[i]) << '\n';
  }
  return os.str();
}

Vocabulary Vocabulary::from_text(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string header;
  if (!std::getline(is, header)) throw FormatError("empty vocabulary file");
  std::istringstream hs(header);
  std::string magic, mode_kv, size_kv, freq_kv;
  int version = 0;
  hs >> magic >> version >> mode_kv >> size_kv >> freq_kv;
  if (magic != kMagic || version != kVersion) throw FormatError("not a version-1 vocabulary file");
  auto value_of = [](const std::string& kv, std::string_view key) {
    if (kv.rfind(std::string(key) + "=", 0) != 0) throw FormatError("missing " + std::string(key));
    return kv.substr(key.size() + 1);
  };
  const auto mode = parse_vocab_mode(value_of(mode_kv, "mode"));
  const auto size = std::stoull(value_of(size_kv, "size"));
  const auto min_freq = std::stoull(value_of(freq_kv, "min_freq"));
  std::vector<std::string> tokens;
  tokens.reserve(size);
  std::string line;
  while (tokens.size() < size && std::getline(is, line)) {
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError("vocabulary line without tab");
    if (std::stoull(line.substr(0, tab)) != tokens.size()) throw FormatError("vocabulary ids out of order");
    tokens.push_back(unescape_token(std::string_view(line).substr(tab + 1)));
  }
  if (tokens.size() != size) throw FormatError("vocabulary shorter than its header");
  const auto& specials = special_tokens();
  if (tokens.size() < specials.size() || !std::equal(specials.begin(), specials.end(), tokens.begin())) {
    throw FormatError("vocabulary does not start with the reserved tokens");
  }
  return Vocabulary(mode, min_freq, std::move(tokens));
}

void Vocabulary::save(const std::filesystem::path& path) const { write_file_atomic(path, to_text()); }

Vocabulary Vocabulary::load(const std::filesystem::path& path) { return from_text(read_file(path)); }

std::string Vocabulary::content_hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(to_text())));
  return buf;
}

}  // namespace recipegen
