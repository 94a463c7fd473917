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
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "recipegen/corpus.hpp"
#include "recipegen/errors.hpp"
#include "recipegen/special_tokens.hpp"
#include "recipegen/synthetic.hpp"

using namespace recipegen;
namespace fs = std::filesystem;

namespace {

const fs::path kData = RECIPEGEN_TEST_DATA;

std::string trim_newline(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

RecipeRecord make(std::string id, std::string title, std::vector<IngredientLine> ingredients,
                  std::vector<std::string> steps) {
  return RecipeRecord{std::move(id), std::move(title), std::move(ingredients), std::move(steps)};
}

IngredientLine line(std::optional<Rational> q, std::string unit, std::string name) {
  return IngredientLine{q, std::move(unit), std::move(name)};
}

TaggedDocument doc_of_length(std::size_t n) {
  return TaggedDocument::from_text(std::string(n, 'x'));
}

RecipeRecord random_record(std::mt19937_64& rng, int i) {
  static const std::vector<std::string> names = {"flour", "olive oil", "salt", "brown sugar", "egg", "milk"};
  static const std::vector<std::string> units = {"", "cup", "tsp", "tbsp", "g"};
  static const std::vector<std::pair<int, int>> qs = {{1, 2}, {3, 4}, {2, 1}, {5, 2}, {7, 8}, {2, 7}, {10, 1}};
  RecipeRecord r;
  r.id = "r" + std::to_string(i);
  r.title = "Dish " + std::to_string(i) + " with 1/2 portion";
  const auto n = 1 + rng() % 4;
  for (std::size_t k = 0; k < n; ++k) {
    std::optional<Rational> q;
    if (rng() % 3) {
      const auto& [a, b] = qs[rng() % qs.size()];
      q = Rational(a, b);
    }
    r.ingredients.push_back(line(q, units[rng() % units.size()], names[rng() % names.size()]));
  }
  const auto steps = 1 + rng() % 3;
  for (std::size_t k = 0; k < steps; ++k) r.instructions.push_back("Step " + std::to_string(k) + ", stir ½ well.");
  return canonical_record(r);
}

}  // namespace

TEST_SUITE("rational and ingredient lines") {
  TEST_CASE("rational parsing and reduction") {
    CHECK(Rational::parse("2/4") == Rational(1, 2));
    CHECK(Rational::parse("1 1/2") == Rational(3, 2));
    CHECK(Rational::parse("½") == Rational(1, 2));
    CHECK(Rational::parse("0.25") == Rational(1, 4));
    CHECK(Rational(3, 2).to_mixed_string() == "1 1/2");
    CHECK_THROWS_AS(Rational(1, 0), ValidationError);
    CHECK_THROWS_AS(Rational::parse("a lot"), ValidationError);
  }

  TEST_CASE("ingredient line render and parse") {
    const auto l = line(Rational(3, 2), "cup", "butter");
    CHECK(render_ingredient(l) == "1 1/2 cup butter");
    CHECK(parse_ingredient("1 1/2 cup butter") == l);
    CHECK(parse_ingredient("2 eggs") == line(Rational(2, 1), "", "eggs"));
    CHECK(parse_ingredient("salt") == line(std::nullopt, "", "salt"));
    // A lone unit word is a name, not a unit.
    CHECK(parse_ingredient("cup") == line(std::nullopt, "", "cup"));
  }
}

TEST_SUITE("ingest") {
  TEST_CASE("well-formed rows become records") {
    const auto r = ingest(kData / "toy_recipes.jsonl", CorpusFormat::record_lines);
    CHECK(r.records.size() == 10);
    CHECK(r.rejects.empty());
    CHECK(r.records[0].id == "toy-01");
  }

  TEST_CASE("malformed rows are reported, not dropped silently") {
    const std::string text =
        R"({"id":"a","title":"A","ingredients":[{"quantity":null,"unit":"","name":"x"}],"instructions":["s"]})"
        "\n"
        R"({"id":"b","ingredients":[],"instructions":["s"]})"
        "\n{not json\n"
        R"({"id":"c","title":"C","ingredients":["1 cup rice"],"instructions":["s"]})"
        "\n";
    const auto r = ingest_text(text, CorpusFormat::record_lines);
    REQUIRE(r.records.size() == 2);
    REQUIRE(r.rejects.size() == 2);
    CHECK(r.rejects[0].line == 2);
    CHECK(r.rejects[1].line == 3);
    CHECK(r.records[1].ingredients[0] == line(Rational(1, 1), "cup", "rice"));
  }

  TEST_CASE("errors: unreadable file and empty corpus") {
    CHECK_THROWS_AS(ingest(kData / "does_not_exist.jsonl", CorpusFormat::record_lines), IoError);
    CHECK_THROWS_AS(ingest_text("\n\n", CorpusFormat::record_lines), EmptyCorpusError);
    CHECK_THROWS_AS(ingest_text("{bad\n", CorpusFormat::record_lines), EmptyCorpusError);
  }

  TEST_CASE("export then re-ingest is the identity for both formats") {
    const auto first = ingest(kData / "toy_recipes.jsonl", CorpusFormat::record_lines);
    std::mt19937_64 rng(3);
    auto records = first.records;
    for (int i = 0; i < 20; ++i) records.push_back(random_record(rng, i));
    records.back().title = "Tabs\tand | pipes; semis \\ slashes";
    records.back() = canonical_record(records.back());
    for (auto format : {CorpusFormat::record_lines, CorpusFormat::delimited_table}) {
      const auto again = ingest_text(export_text(records, format), format);
      CHECK(again.rejects.empty());
      CHECK(again.records == records);
    }
  }
}

TEST_SUITE("clean") {
  TEST_CASE("first occurrence wins for duplicates") {
    const auto r1 = make("r1", "Toast", {line(std::nullopt, "", "bread")}, {"Toast it."});
    auto dup = r1;
    dup.id = "r1-dup";
    dup.title = "TOAST";
    const auto r2 = make("r2", "Tea", {line(std::nullopt, "", "water")}, {"Boil."});
    const std::vector<RecipeRecord> in = {r1, dup, r2};
    const auto out = clean(in);
    CHECK(out.kept == std::vector<RecipeRecord>{r1, r2});
    REQUIRE(out.rejected.size() == 1);
    CHECK(out.rejected[0] == Rejection{"r1-dup", "redundant"});
  }

  TEST_CASE("ingredient order does not distinguish duplicates") {
    const auto a = make("a", "Mix", {line(std::nullopt, "", "salt"), line(std::nullopt, "", "flour")}, {"Mix."});
    const auto b = make("b", "Mix", {line(Rational(1, 1), "cup", "flour"), line(std::nullopt, "", "Salt")}, {"Mix."});
    const std::vector<RecipeRecord> in = {a, b};
    CHECK(clean(in).kept.size() == 1);
  }

  TEST_CASE("incomplete records are rejected") {
    const auto empty_steps = make("e", "Toast", {line(std::nullopt, "", "bread")}, {});
    const auto empty_title = make("t", "", {line(std::nullopt, "", "bread")}, {"x"});
    const auto blank_step = make("s", "Toast", {line(std::nullopt, "", "bread")}, {"a", ""});
    const auto reserved = make("r", "Toast <RECIPE_END>", {line(std::nullopt, "", "bread")}, {"a"});
    const std::vector<RecipeRecord> in = {empty_steps, empty_title, blank_step, reserved};
    const auto out = clean(in);
    CHECK(out.kept.empty());
    REQUIRE(out.rejected.size() == 4);
    for (const auto& r : out.rejected) CHECK(r.reason == "incomplete");
  }

  TEST_CASE("distinct valid records are all kept and clean is idempotent") {
    std::mt19937_64 rng(11);
    std::vector<RecipeRecord> in;
    for (int i = 0; i < 100; ++i) in.push_back(random_record(rng, i));
    const auto once = clean(in);
    CHECK(once.kept.size() == 100);
    CHECK(clean(once.kept).kept == once.kept);

    const auto synth = synthesize_corpus({.total = 300, .duplicates = 10, .incomplete = 10, .overlength = 3,
                                          .short_docs = 5, .seed = 4});
    const auto c1 = clean(synth.records);
    CHECK(clean(c1.kept).kept == c1.kept);
  }
}

TEST_SUITE("length statistics and windowing") {
  TEST_CASE("hand examples") {
    const std::vector<std::size_t> a = {100, 100, 100};
    auto s = length_stats(std::span<const std::size_t>(a));
    CHECK(s.mean_len == 100.0);
    CHECK(s.std_len == 0.0);
    const std::vector<std::size_t> b = {90, 110};
    s = length_stats(std::span<const std::size_t>(b));
    CHECK(s.mean_len == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(s.std_len == doctest::Approx(10.0).epsilon(1e-12));
    const std::vector<std::size_t> c = {50, 100, 150};
    s = length_stats(std::span<const std::size_t>(c));
    CHECK(s.std_len == doctest::Approx(std::sqrt(5000.0 / 3.0)).epsilon(1e-12));
    CHECK(s.min_len == 50);
    CHECK(s.max_len == 150);
    const std::vector<std::size_t> none;
    CHECK_THROWS_AS(length_stats(std::span<const std::size_t>(none)), EmptyCorpusError);
  }

  TEST_CASE("matches a two-pass computation on 10^4 lengths") {
    std::mt19937_64 rng(5);
    std::vector<std::size_t> lens(10000);
    for (auto& l : lens) l = 200 + rng() % 1800;
    const auto s = length_stats(std::span<const std::size_t>(lens), 37);
    long double sum = 0;
    for (auto l : lens) sum += l;
    const long double mean = sum / lens.size();
    long double ss = 0;
    for (auto l : lens) ss += (l - mean) * (l - mean);
    const double sd = static_cast<double>(std::sqrt(ss / lens.size()));
    CHECK(std::abs(s.mean_len - static_cast<double>(mean)) <= 1e-9 * static_cast<double>(mean));
    CHECK(std::abs(s.std_len - sd) <= 1e-9 * sd);
    CHECK(std::accumulate(s.histogram.begin(), s.histogram.end(), std::size_t{0}) == lens.size());
    CHECK(s.min_len + s.bin_width * s.histogram.size() > s.max_len);
  }

  TEST_CASE("window keeps short docs and drops over-length ones") {
    CorpusStats s;
    s.mean_len = 1000;
    s.std_len = 300;
    const std::vector<TaggedDocument> docs = {doc_of_length(2500), doc_of_length(1400), doc_of_length(300),
                                              doc_of_length(1601), doc_of_length(1600)};
    const auto w = select_window(docs, s);
    REQUIRE(w.dropped.size() == 2);
    CHECK(w.dropped[0].char_len == 2500);
    CHECK(w.dropped[1].char_len == 1601);
    CHECK(w.kept.size() == 3);
    CHECK(w.short_count == 1);
  }

  TEST_CASE("hard cap binds when the statistical bound is looser") {
    CorpusStats s;
    s.mean_len = 1500;
    s.std_len = 400;
    const std::vector<TaggedDocument> docs = {doc_of_length(2000), doc_of_length(2001)};
    const auto w = select_window(docs, s, 2000);
    CHECK(w.kept.size() == 1);
    CHECK(w.kept[0].char_len == 2000);
  }

  TEST_CASE("merge_short follows the greedy rule") {
    CorpusStats s;
    s.mean_len = 1000;
    s.std_len = 200;
    std::vector<TaggedDocument> three = {doc_of_length(300), doc_of_length(300), doc_of_length(300)};
    auto m = merge_short(three, s);
    REQUIRE(m.size() == 1);
    CHECK(m[0].char_len == 900);
    CHECK(m[0].recipe_count == 3);

    std::vector<TaggedDocument> no_short = {doc_of_length(900), doc_of_length(1100)};
    CHECK(merge_short(no_short, s) == no_short);

    std::vector<TaggedDocument> single = {doc_of_length(1000), doc_of_length(100), doc_of_length(1000)};
    m = merge_short(single, s);
    REQUIRE(m.size() == 3);
    CHECK(m[1].char_len == 100);
  }

  TEST_CASE("merge_short conserves recipes and respects the cap") {
    CorpusStats s;
    s.mean_len = 1000;
    s.std_len = 150;  // threshold 550, target 850
    std::mt19937_64 rng(9);
    std::vector<TaggedDocument> docs;
    for (int i = 0; i < 200; ++i) docs.push_back(doc_of_length(rng() % 2 ? 100 + rng() % 400 : 800 + rng() % 400));
    const auto m = merge_short(docs, s, 1000);
    std::size_t recipes = 0;
    for (const auto& d : m) {
      recipes += d.recipe_count;
      if (d.recipe_count > 1) CHECK(d.char_len <= 1000);
    }
    CHECK(recipes == docs.size());
  }
}

TEST_SUITE("tagged grammar") {
  TEST_CASE("golden serialization") {
    const auto records = ingest(kData / "golden_minimal.jsonl", CorpusFormat::record_lines).records;
    REQUIRE(records.size() == 1);
    const auto doc = serialize(records[0]);
    CHECK(doc.text == trim_newline(read_file(kData / "golden_minimal.tagged")));
    CHECK(doc.char_len == utf8_length(doc.text));
    CHECK(serialize(records[0]) == doc);
  }

  TEST_CASE("invalid record cannot be serialized") {
    const auto r = make("x", "", {line(std::nullopt, "", "salt")}, {"a"});
    CHECK_THROWS_AS(serialize(r), ValidationError);
  }

  TEST_CASE("parse inverts serialize on random records") {
    std::mt19937_64 rng(21);
    for (int i = 0; i < 300; ++i) {
      const auto r = random_record(rng, i);
      REQUIRE(is_valid(r));
      const auto p = parse(serialize(r).text);
      CHECK_FALSE(p.malformed);
      auto expect = r;
      expect.id.clear();
      CHECK(p.record == expect);
      CHECK(p.recovered.size() == 3);
    }
  }

  TEST_CASE("truncated instructions give a partial record") {
    const std::string text =
        "<RECIPE_START> <INGR_START> 1 cup rice <INGR_END> <TITLE_START> Rice <TITLE_END> <INSTR_START> Boil "
        "<NEXT_INSTR> Ser";
    const auto p = parse(text);
    CHECK(p.malformed);
    CHECK(p.record.title == "Rice");
    REQUIRE(p.record.ingredients.size() == 1);
    CHECK(p.record.instructions == std::vector<std::string>{"Boil"});
    CHECK(p.recovered == std::vector<Section>{Section::ingredients, Section::title});
  }

  TEST_CASE("missing instructions-end tag") {
    const std::string text =
        "<RECIPE_START> <INGR_START> salt <INGR_END> <TITLE_START> Salt <TITLE_END> <INSTR_START> Eat. <RECIPE_END>";
    const auto p = parse(text);
    CHECK(p.malformed);
    CHECK(p.record.title == "Salt");
    CHECK(p.record.ingredients.size() == 1);
  }

  TEST_CASE("unparseable input") {
    CHECK_THROWS_AS(parse(""), UnparseableError);
    CHECK_THROWS_AS(parse("just words"), UnparseableError);
  }

  TEST_CASE("split_recipes, strip_tags and flatten_record") {
    const auto r = make("id", "Toast", {line(Rational(1, 2), "cup", "butter")}, {"Spread."});
    const std::string two = serialize(r).text + serialize(r).text;
    const auto parts = split_recipes(two);
    REQUIRE(parts.size() == 2);
    CHECK(parse(parts[1]).record.title == "Toast");
    CHECK(strip_tags(serialize(r).text) == "1/2 cup butter Toast Spread.");
    CHECK(flatten_record(r) == "Toast 1/2 cup butter Spread.");
  }

  TEST_CASE("document files round trip") {
    const auto path = fs::temp_directory_path() / "recipegen_docs_test.txt";
    const auto r = make("id", "Toast", {line(Rational(1, 2), "cup", "butter")}, {"Spread."});
    std::vector<TaggedDocument> docs = {serialize(r)};
    auto merged = serialize(r);
    merged.text += serialize(r).text;
    merged.char_len *= 2;
    merged.recipe_count = 2;
    docs.push_back(merged);
    write_documents(docs, path);
    CHECK(read_documents(path) == docs);
    fs::remove(path);
  }
}

TEST_SUITE("prepare") {
  TEST_CASE("synthetic corpus with planted defects") {
    const auto synth = synthesize_corpus();
    IngestResult in{synth.records, {}};
    const auto result = prepare(in);
    std::set<std::string> redundant, incomplete;
    for (const auto& r : result.rejected) (r.reason == "redundant" ? redundant : incomplete).insert(r.id);
    CHECK(redundant == std::set<std::string>(synth.duplicate_ids.begin(), synth.duplicate_ids.end()));
    CHECK(incomplete == std::set<std::string>(synth.incomplete_ids.begin(), synth.incomplete_ids.end()));
    CHECK(std::set<std::string>(result.dropped_ids.begin(), result.dropped_ids.end()) ==
          std::set<std::string>(synth.overlength_ids.begin(), synth.overlength_ids.end()));
    CHECK(result.report.short_docs == synth.short_ids.size());
    CHECK(result.report.output_recipes == result.report.kept_records);
    for (const auto& d : result.docs) {
      CHECK(d.char_len <= kDefaultHardCap);
      for (auto piece : split_recipes(d.text)) CHECK_FALSE(parse(piece).malformed);
    }
  }

  TEST_CASE("no-merge passes documents through and heldout split is deterministic") {
    const auto in = ingest(kData / "toy_recipes.jsonl", CorpusFormat::record_lines);
    PrepOptions opts;
    opts.merge = false;
    opts.split_heldout = true;
    const auto a = prepare(in, opts);
    const auto b = prepare(in, opts);
    CHECK(a.docs == b.docs);
    CHECK(a.heldout == b.heldout);
    CHECK(a.report.output_docs + a.report.heldout_records == 10);
    for (const auto& r : a.heldout) CHECK(is_heldout_id(r.id));
    CHECK(a.report.to_text().find("output_docs: ") != std::string::npos);
  }
}
