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

#include <algorithm>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "recipegen/corpus.hpp"
#include "recipegen/errors.hpp"
#include "recipegen/special_tokens.hpp"
#include "recipegen/vocabulary.hpp"

using namespace recipegen;

namespace {

std::vector<TaggedDocument> one_doc(std::string text) { return {TaggedDocument::from_text(std::move(text))}; }

}  // namespace

TEST_SUITE("special tokens") {
  TEST_CASE("inventory is pad, unk, eos, control tags, fractions") {
    const auto& s = special_tokens();
    REQUIRE(s.size() == 22);
    CHECK(s[0] == "<PAD>");
    CHECK(s[1] == "<UNK>");
    CHECK(s[2] == "<EOS>");
    CHECK(s[3] == "<RECIPE_START>");
    CHECK(s[13] == "<F_1_2>");
    CHECK(s[21] == "<F_7_8>");
  }

  TEST_CASE("normalize_numbers substitutes known fractions only") {
    CHECK(normalize_numbers("1/2 cup sugar") == "<F_1_2> cup sugar");
    CHECK(normalize_numbers("½ tsp") == "<F_1_2> tsp");
    CHECK(normalize_numbers("350 degrees") == "350 degrees");
    CHECK(normalize_numbers("2/7 cup") == "2/7 cup");
    CHECK(normalize_numbers("1 3/4 cups") == "1 <F_3_4> cups");
    // Not standalone: part of a larger token.
    CHECK(normalize_numbers("11/2") == "11/2");
    CHECK(normalize_numbers("1/23") == "1/23");
  }

  TEST_CASE("normalize_numbers is idempotent and inverted by denormalize_numbers") {
    const std::vector<std::string> inputs = {"1/2 cup sugar", "⅓ cup oil and 3/8 tsp salt", "no numbers",
                                             "2 ¾ cups", "<F_1_4> already"};
    for (const auto& x : inputs) {
      const auto once = normalize_numbers(x);
      CHECK(normalize_numbers(once) == once);
    }
    CHECK(denormalize_numbers("<F_1_2> cup and <F_7_8> tsp") == "1/2 cup and 7/8 tsp");
  }

  TEST_CASE("match_special prefers the longest token") {
    const std::string text = "x<RECIPE_START>y";
    auto m = match_special(text, 1);
    REQUIRE(m.has_value());
    CHECK(*m == "<RECIPE_START>");
    CHECK_FALSE(match_special(text, 0).has_value());
    CHECK_FALSE(match_special("<RECIPE_STAR", 0).has_value());
  }

  TEST_CASE("utf8 helpers") {
    CHECK(utf8_length("a½b") == 3);
    CHECK(collapse_whitespace("  a \t b\n ") == "a b");
    CHECK(to_lower("SaLT") == "salt");
  }
}

TEST_SUITE("vocabulary") {
  TEST_CASE("char vocabulary of a minimal document") {
    const auto v = Vocabulary::build(one_doc("<RECIPE_START> ab <RECIPE_END>"), VocabMode::character);
    CHECK(v.size() == 22 + 3);
    // Frequency descending: space occurs twice, then 'a' and 'b' in byte order.
    CHECK(v.token(22) == " ");
    CHECK(v.token(23) == "a");
    CHECK(v.token(24) == "b");
  }

  TEST_CASE("build is deterministic") {
    const auto docs = one_doc("<RECIPE_START> <INGR_START> salt <INGR_END> <RECIPE_END>");
    CHECK(Vocabulary::build(docs, VocabMode::character) == Vocabulary::build(docs, VocabMode::character));
    CHECK(Vocabulary::build(docs, VocabMode::word) == Vocabulary::build(docs, VocabMode::word));
  }

  TEST_CASE("empty corpus is an error") {
    std::vector<TaggedDocument> none;
    CHECK_THROWS_AS(Vocabulary::build(none, VocabMode::character), EmptyCorpusError);
  }

  TEST_CASE("word mode min_freq maps rare words to unk") {
    const auto v = Vocabulary::build(one_doc("salt salt pepper"), VocabMode::word, 2);
    CHECK(v.find("salt").has_value());
    CHECK_FALSE(v.find("pepper").has_value());
    const auto ids = v.encode("salt pepper");
    REQUIRE(ids.size() == 2);
    CHECK(ids[1] == v.unk_id());
  }

  TEST_CASE("special tokens encode atomically") {
    const auto v = Vocabulary::build(one_doc("abc"), VocabMode::character);
    for (const auto& s : special_tokens()) {
      const auto ids = v.encode(s);
      REQUIRE(ids.size() == 1);
      CHECK(v.token(ids[0]) == s);
    }
  }

  TEST_CASE("fraction token then characters") {
    const auto v = Vocabulary::build(one_doc("<F_1_2> cup"), VocabMode::character);
    const auto ids = v.encode(normalize_numbers("1/2 cup"));
    REQUIRE(ids.size() == 5);
    CHECK(ids[0] == v.id("<F_1_2>"));
    CHECK(ids[1] == v.id(" "));
    CHECK(ids[2] == v.id("c"));
  }

  TEST_CASE("unknown characters map to unk") {
    const auto v = Vocabulary::build(one_doc("ab"), VocabMode::character);
    const auto ids = v.encode("az");
    CHECK(ids[1] == v.unk_id());
  }

  TEST_CASE("decode round trips and rejects out-of-range ids") {
    const auto cv = Vocabulary::build(one_doc("mix the flour"), VocabMode::character);
    CHECK(cv.decode({}) == "");
    CHECK(cv.decode(cv.encode("mix the flour")) == "mix the flour");
    const auto wv = Vocabulary::build(one_doc("mix the flour"), VocabMode::word);
    CHECK(wv.decode(wv.encode("mix the flour")) == "mix the flour");
    const std::vector<TokenId> bad = {static_cast<TokenId>(cv.size())};
    CHECK_THROWS_AS(cv.decode(bad), RangeError);
  }

  TEST_CASE("char round trip over random strings of the alphabet with specials") {
    const std::string alphabet = "abcdef ghij.,½";
    const auto v = Vocabulary::build(one_doc(alphabet), VocabMode::character);
    std::mt19937_64 rng(7);
    const std::vector<std::string> pieces = {"a", "b", " ", ".", "½", "<NEXT_INGR>", "<F_1_3>", "j", "<RECIPE_END>"};
    for (int trial = 0; trial < 200; ++trial) {
      std::string x;
      const auto n = rng() % 30;
      for (std::size_t i = 0; i < n; ++i) x += pieces[rng() % pieces.size()];
      CHECK(v.decode(v.encode(x)) == x);
    }
  }

  TEST_CASE("ids and tokens are a bijection") {
    const auto v = Vocabulary::build(one_doc("<RECIPE_START> some text here <RECIPE_END>"), VocabMode::word);
    for (TokenId i = 0; i < v.size(); ++i) CHECK(v.id(v.token(i)) == i);
  }

  TEST_CASE("text serialization round trip and corruption") {
    const auto v = Vocabulary::build(one_doc("tab\there\nback\\slash"), VocabMode::character);
    const auto w = Vocabulary::from_text(v.to_text());
    CHECK(v == w);
    CHECK(v.content_hash() == w.content_hash());
    CHECK_THROWS_AS(Vocabulary::from_text(""), FormatError);
    CHECK_THROWS_AS(Vocabulary::from_text("not-a-vocab 1\n"), FormatError);

    const auto path = std::filesystem::temp_directory_path() / "recipegen_vocab_test.txt";
    v.save(path);
    CHECK(Vocabulary::load(path) == v);
    std::filesystem::remove(path);
  }
}
