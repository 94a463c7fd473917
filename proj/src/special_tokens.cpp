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

#include "recipegen/special_tokens.hpp"

#include <algorithm>
#include <cctype>

namespace recipegen {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

const FractionToken* vulgar_at(std::string_view text, std::size_t pos) {
  for (const auto& f : fraction_tokens) {
    if (text.substr(pos, f.vulgar.size()) == f.vulgar) return &f;
  }
  return nullptr;
}

// Shared scanner for normalize_numbers / ascii_fractions. `ascii_only`
// rewrites only the unicode forms, and to "n/d" rather than tokens.
std::string rewrite_fractions(std::string_view text, bool ascii_only) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (const FractionToken* f = vulgar_at(text, i)) {
      if (!out.empty() && is_digit(out.back())) out.push_back(' ');
      if (ascii_only) {
        out += std::to_string(f->numerator);
        out.push_back('/');
        out += std::to_string(f->denominator);
      } else {
        out += f->token;
      }
      i += f->vulgar.size();
      continue;
    }
    const char c = text[i];
    const bool boundary_before =
        i == 0 || !(is_digit(text[i - 1]) || text[i - 1] == '/' || is_alpha(text[i - 1]));
    if (!ascii_only && is_digit(c) && boundary_before) {
      std::size_t j = i;
      while (j < text.size() && is_digit(text[j])) ++j;
      if (j < text.size() && text[j] == '/' && j + 1 < text.size() && is_digit(text[j + 1])) {
        std::size_t k = j + 1;
        while (k < text.size() && is_digit(text[k])) ++k;
        const bool boundary_after = k == text.size() || !(is_digit(text[k]) || text[k] == '/');
        if (boundary_after && j - i <= 3 && k - j - 1 <= 3) {
          const long long num = std::stoll(std::string(text.substr(i, j - i)));
          const long long den = std::stoll(std::string(text.substr(j + 1, k - j - 1)));
          auto tok = fraction_token_for(num, den);
          // "01/2" style numerals keep their spelling.
          if (tok && text[i] != '0' && text[j + 1] != '0') {
            out += *tok;
            i = k;
            continue;
          }
        }
        out.append(text.substr(i, k - i));
        i = k;
        continue;
      }
      out.append(text.substr(i, j - i));
      i = j;
      continue;
    }
    out.push_back(c);
    ++i;
  }
  return out;
}

}  // namespace

const std::vector<std::string>& special_tokens() {
  static const std::vector<std::string> all = [] {
    std::vector<std::string> v;
    v.emplace_back(tags::pad);
    v.emplace_back(tags::unk);
    v.emplace_back(tags::eos);
    for (auto t : tags::control) v.emplace_back(t);
    for (const auto& f : fraction_tokens) v.emplace_back(f.token);
    return v;
  }();
  return all;
}

std::optional<std::string_view> match_special(std::string_view text, std::size_t pos) {
  if (pos >= text.size() || text[pos] != '<') return std::nullopt;
  std::optional<std::string_view> best;
  for (const auto& s : special_tokens()) {
    if (text.substr(pos, s.size()) == s && (!best || s.size() > best->size())) {
      best = std::string_view(s);
    }
  }
  return best;
}

bool contains_special(std::string_view text) {
  for (std::size_t i = text.find('<'); i != std::string_view::npos; i = text.find('<', i + 1)) {
    if (match_special(text, i)) return true;
  }
  return false;
}

std::optional<std::string_view> fraction_token_for(long long numerator, long long denominator) {
  for (const auto& f : fraction_tokens) {
    if (f.numerator == numerator && f.denominator == denominator) return f.token;
  }
  return std::nullopt;
}

const FractionToken* find_fraction_token(std::string_view token) {
  for (const auto& f : fraction_tokens) {
    if (f.token == token) return &f;
  }
  return nullptr;
}

std::string normalize_numbers(std::string_view text) { return rewrite_fractions(text, false); }

std::string ascii_fractions(std::string_view text) { return rewrite_fractions(text, true); }

std::string denormalize_numbers(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '<') {
      if (auto s = match_special(text, i)) {
        if (const FractionToken* f = find_fraction_token(*s)) {
          out += std::to_string(f->numerator);
          out.push_back('/');
          out += std::to_string(f->denominator);
          i += s->size();
          continue;
        }
      }
    }
    out.push_back(text[i]);
    ++i;
  }
  return out;
}

std::size_t utf8_char_width(std::string_view text, std::size_t pos) {
  const auto c = static_cast<unsigned char>(text[pos]);
  std::size_t w = 1;
  if ((c & 0xE0) == 0xC0) {
    w = 2;
  } else if ((c & 0xF0) == 0xE0) {
    w = 3;
  } else if ((c & 0xF8) == 0xF0) {
    w = 4;
  }
  if (pos + w > text.size()) return 1;
  for (std::size_t k = 1; k < w; ++k) {
    if ((static_cast<unsigned char>(text[pos + k]) & 0xC0) != 0x80) return 1;
  }
  return w;
}

std::size_t utf8_length(std::string_view text) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < text.size(); i += utf8_char_width(text, i)) ++n;
  return n;
}

std::string collapse_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) words.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return words;
}

std::string to_lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace recipegen
