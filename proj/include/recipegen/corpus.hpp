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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace recipegen {

/// Nonnegative rational kept in lowest terms, so `==` is value equality.
class Rational {
 public:
  Rational() = default;
  /// Throws ValidationError when `denominator <= 0` or `numerator < 0`.
  Rational(std::int64_t numerator, std::int64_t denominator);

  /// Accepts "n", "n/d" and decimals such as "1.25".
  static Rational parse(std::string_view text);

  std::int64_t numerator() const { return num_; }
  std::int64_t denominator() const { return den_; }
  double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  /// "3", "1/2", "7/3".
  std::string to_string() const;

  /// Mixed human form: "1 1/2", "3", "1/4".
  std::string to_mixed_string() const;

  bool operator==(const Rational&) const = default;

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

struct IngredientLine {
  std::optional<Rational> quantity;
  std::string unit;
  std::string name;

  bool operator==(const IngredientLine&) const = default;
};

struct RecipeRecord {
  std::string id;
  std::string title;
  std::vector<IngredientLine> ingredients;
  std::vector<std::string> instructions;

  bool operator==(const RecipeRecord&) const = default;
};

/// One or more recipes rendered in the tagged grammar.
struct TaggedDocument {
  std::string text;
  std::size_t char_len = 0;
  std::size_t recipe_count = 1;

  static TaggedDocument from_text(std::string text, std::size_t recipe_count = 1);
  bool operator==(const TaggedDocument&) const = default;
};

struct CorpusStats {
  std::size_t n = 0;
  double mean_len = 0.0;
  double std_len = 0.0;  // population standard deviation
  std::size_t min_len = 0;
  std::size_t max_len = 0;
  std::size_t bin_width = 1;
  std::vector<std::size_t> histogram;  // bin i covers [min_len + i*bin_width, min_len + (i+1)*bin_width)
};

enum class CorpusFormat { record_lines, delimited_table };

CorpusFormat parse_corpus_format(std::string_view name);

// ---------------------------------------------------------------------------
// Ingredient lines and canonical form.

/// Units recognized when splitting "2 cup flour" into quantity, unit and name.
bool is_known_unit(std::string_view word);

/// Human-readable line: "1 1/2 cup flour". Absent fields are omitted.
std::string render_ingredient(const IngredientLine& line);

/// Reads a human-readable line. A quantity or unit is only taken when at
/// least one word follows it, so the name is never empty for nonempty input.
IngredientLine parse_ingredient(std::string_view text);

/// The unique form that survives render/parse. Text fields are trimmed,
/// whitespace-collapsed and carry ASCII fractions.
IngredientLine canonical_ingredient(const IngredientLine& line);
RecipeRecord canonical_record(RecipeRecord record);

/// Reasons `record` breaks a RecipeRecord invariant or is not canonical;
/// empty when valid.
std::vector<std::string> violations(const RecipeRecord& record);
bool is_valid(const RecipeRecord& record);

// ---------------------------------------------------------------------------
// Ingest / export.

struct RowReject {
  std::size_t line = 0;  // 1-based physical line in the input file
  std::string reason;
};

struct IngestResult {
  std::vector<RecipeRecord> records;
  std::vector<RowReject> rejects;
};

/// Reads a corpus file. Rows that cannot be decoded into the record schema
/// are reported in `rejects`. Records are canonicalized but not validated;
/// that is clean()'s job.
IngestResult ingest(const std::filesystem::path& path, CorpusFormat format);
IngestResult ingest_text(std::string_view content, CorpusFormat format);

void export_records(std::span<const RecipeRecord> records, const std::filesystem::path& path,
                    CorpusFormat format);
std::string export_text(std::span<const RecipeRecord> records, CorpusFormat format);

/// One record as a record-lines JSON object (no trailing newline).
std::string to_record_line(const RecipeRecord& record);

// ---------------------------------------------------------------------------
// Cleaning and length windowing.

struct Rejection {
  std::string id;
  std::string reason;  // "incomplete" or "redundant"
  bool operator==(const Rejection&) const = default;
};

struct CleanResult {
  std::vector<RecipeRecord> kept;
  std::vector<Rejection> rejected;
};

/// Drops invalid records ("incomplete") and records repeating an earlier
/// normalized title + ingredient-name multiset ("redundant").
CleanResult clean(std::span<const RecipeRecord> records);

CorpusStats length_stats(std::span<const TaggedDocument> docs, std::size_t bins = 20);
CorpusStats length_stats(std::span<const std::size_t> lengths, std::size_t bins = 20);

struct WindowResult {
  std::vector<TaggedDocument> kept;
  std::vector<TaggedDocument> dropped;
  std::size_t short_count = 0;  // kept docs below mean - 2 sigma
};

inline constexpr std::size_t kDefaultHardCap = 2000;

/// Keeps every doc no longer than min(hard_cap, mean + 2 sigma); short docs
/// are kept for merge_short().
WindowResult select_window(std::span<const TaggedDocument> docs, const CorpusStats& stats,
                           std::size_t hard_cap = kDefaultHardCap);

/// Concatenates docs shorter than max(1, mean - 3 sigma) in corpus order
/// until each group first reaches mean - sigma. A group never grows past
/// `hard_cap`. Merged groups take the position of their first member.
std::vector<TaggedDocument> merge_short(std::span<const TaggedDocument> docs,
                                        const CorpusStats& stats,
                                        std::size_t hard_cap = kDefaultHardCap);

// ---------------------------------------------------------------------------
// Tagged grammar.

/// Throws ValidationError for an invalid record.
TaggedDocument serialize(const RecipeRecord& record);

enum class Section { ingredients, title, instructions };

struct ParseResult {
  RecipeRecord record;  // id is left empty
  bool malformed = false;
  std::vector<Section> recovered;  // sections whose closing tag was seen
};

/// Best-effort inverse of serialize() for the first recipe in `text`.
/// Throws UnparseableError when there is no recipe-start tag.
ParseResult parse(std::string_view text);

/// Splits a (possibly merged) document into single-recipe spans, each
/// starting at a recipe-start tag.
std::vector<std::string_view> split_recipes(std::string_view text);

/// Tags removed, fraction tokens spelled as ASCII, whitespace collapsed.
std::string strip_tags(std::string_view text);

/// Title, rendered ingredient lines, then instruction steps, space-joined.
std::string flatten_record(const RecipeRecord& record);

// ---------------------------------------------------------------------------
// Full preparation pipeline.

struct PrepOptions {
  std::size_t hard_cap = kDefaultHardCap;
  bool merge = true;
  std::size_t histogram_bins = 20;
  /// Moves records selected by is_heldout_id() out of the training docs.
  bool split_heldout = false;
};

struct PrepReport {
  std::size_t ingested = 0;
  std::size_t ingest_rejects = 0;
  std::size_t incomplete = 0;
  std::size_t redundant = 0;
  std::size_t kept_records = 0;
  std::size_t heldout_records = 0;
  std::size_t dropped_overlength = 0;
  std::size_t short_docs = 0;
  std::size_t merged_groups = 0;  // output docs holding more than one recipe
  std::size_t output_docs = 0;
  std::size_t output_recipes = 0;
  CorpusStats before_window;
  CorpusStats after_window;

  std::string to_text() const;
};

struct PrepResult {
  std::vector<TaggedDocument> docs;
  std::vector<RecipeRecord> records;  // cleaned records that survived the window
  std::vector<RecipeRecord> heldout;
  std::vector<Rejection> rejected;
  std::vector<RowReject> ingest_rejects;
  std::vector<std::string> dropped_ids;
  PrepReport report;
};

PrepResult prepare(const IngestResult& ingested, const PrepOptions& options = {});

/// Training corpus file: one tagged document per line.
void write_documents(std::span<const TaggedDocument> docs, const std::filesystem::path& path);
std::vector<TaggedDocument> read_documents(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// FNV-1a, used for the held-out split and vocabulary hashes.
std::uint64_t fnv1a64(std::string_view data);

/// Deterministic 90/10 split: true for roughly one id in ten.
bool is_heldout_id(std::string_view id);

}  // namespace recipegen
