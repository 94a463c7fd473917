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

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace recipegen {

namespace tags {
inline constexpr std::string_view recipe_start = "<RECIPE_START>";
inline constexpr std::string_view recipe_end = "<RECIPE_END>";
inline constexpr std::string_view ingr_start = "<INGR_START>";
inline constexpr std::string_view ingr_end = "<INGR_END>";
inline constexpr std::string_view next_ingr = "<NEXT_INGR>";
inline constexpr std::string_view title_start = "<TITLE_START>";
inline constexpr std::string_view title_end = "<TITLE_END>";
inline constexpr std::string_view instr_start = "<INSTR_START>";
inline constexpr std::string_view instr_end = "<INSTR_END>";
inline constexpr std::string_view next_instr = "<NEXT_INSTR>";

inline constexpr std::array<std::string_view, 10> control = {
    recipe_start, recipe_end, ingr_start,  ingr_end,  next_ingr,
    title_start,  title_end,  instr_start, instr_end, next_instr};

inline constexpr std::string_view pad = "<PAD>";
inline constexpr std::string_view unk = "<UNK>";
inline constexpr std::string_view eos = "<EOS>";
}  // namespace tags

/// A culinary fraction with a dedicated token.
struct FractionToken {
  int numerator;
  int denominator;
  std::string_view token;
  std::string_view vulgar;  // unicode vulgar-fraction form, UTF-8
};

inline constexpr std::array<FractionToken, 9> fraction_tokens = {{
    {1, 2, "<F_1_2>", "½"},
    {1, 3, "<F_1_3>", "⅓"},
    {2, 3, "<F_2_3>", "⅔"},
    {1, 4, "<F_1_4>", "¼"},
    {3, 4, "<F_3_4>", "¾"},
    {1, 8, "<F_1_8>", "⅛"},
    {3, 8, "<F_3_8>", "⅜"},
    {5, 8, "<F_5_8>", "⅝"},
    {7, 8, "<F_7_8>", "⅞"},
}};

/// Every reserved token in id order: pad, unk, eos, the ten control tags,
/// then the fraction tokens.
const std::vector<std::string>& special_tokens();

/// Longest special token that starts at `text[pos]`, if any.
std::optional<std::string_view> match_special(std::string_view text, std::size_t pos);

bool contains_special(std::string_view text);

std::optional<std::string_view> fraction_token_for(long long numerator, long long denominator);
const FractionToken* find_fraction_token(std::string_view token);

/// Replaces standalone ASCII fractions ("1/2") and unicode vulgar fractions
/// ("½") with their fraction token. Fractions without a token are left as-is.
std::string normalize_numbers(std::string_view text);

/// Inverse direction: fraction tokens become ASCII "n/d".
std::string denormalize_numbers(std::string_view text);

/// Unicode vulgar fractions become ASCII "n/d"; ASCII text is untouched.
std::string ascii_fractions(std::string_view text);

// UTF-8 helpers. Invalid lead bytes count as one character each.
std::size_t utf8_length(std::string_view text);
std::size_t utf8_char_width(std::string_view text, std::size_t pos);

/// Collapses whitespace runs to one space and trims both ends.
std::string collapse_whitespace(std::string_view text);
std::vector<std::string> split_whitespace(std::string_view text);
std::string to_lower(std::string_view text);

}  // namespace recipegen
