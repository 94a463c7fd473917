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

#include "recipegen/corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "recipegen/errors.hpp"
#include "recipegen/special_tokens.hpp"

namespace recipegen {

namespace {

using ordered_json = nlohmann::ordered_json;

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

// "a/b" with b > 0; digits only.
std::optional<Rational> parse_fraction_word(std::string_view w) {
  const auto slash = w.find('/');
  if (slash == std::string_view::npos) return std::nullopt;
  const auto a = w.substr(0, slash);
  const auto b = w.substr(slash + 1);
  if (!all_digits(a) || !all_digits(b) || a.size() > 9 || b.size() > 9) return std::nullopt;
  const auto den = std::stoll(std::string(b));
  if (den == 0) return std::nullopt;
  return Rational(std::stoll(std::string(a)), den);
}

std::optional<Rational> parse_integer_word(std::string_view w) {
  if (!all_digits(w) || w.size() > 12) return std::nullopt;
  return Rational(std::stoll(std::string(w)), 1);
}

std::string clean_text(std::string_view text) { return collapse_whitespace(ascii_fractions(text)); }

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

constexpr std::array<std::string_view, 40> kUnits = {
    "cup",    "cups",     "tbsp",   "tsp",        "tablespoon", "tablespoons", "teaspoon",
    "teaspoons", "g",     "gram",   "grams",      "kg",         "ml",          "l",
    "liter",  "liters",   "oz",     "ounce",      "ounces",     "lb",          "lbs",
    "pound",  "pounds",   "pinch",  "dash",       "clove",      "cloves",      "can",
    "cans",   "slice",    "slices", "piece",      "pieces",     "stick",       "sticks",
    "quart",  "pint",     "bunch",  "package",    "sprig"};

}  // namespace

// ---------------------------------------------------------------------------
// Rational

Rational::Rational(std::int64_t numerator, std::int64_t denominator) {
  if (denominator <= 0) throw ValidationError("quantity denominator must be positive");
  if (numerator < 0) throw ValidationError("quantity must be nonnegative");
  const auto g = std::gcd(numerator, denominator);
  num_ = numerator / g;
  den_ = denominator / g;
}

Rational Rational::parse(std::string_view text) {
  const auto words = split_whitespace(ascii_fractions(text));
  if (words.size() == 2) {
    auto whole = parse_integer_word(words[0]);
    auto frac = parse_fraction_word(words[1]);
    if (whole && frac) {
      return Rational(whole->numerator() * frac->denominator() + frac->numerator(),
                      frac->denominator());
    }
  } else if (words.size() == 1) {
    const auto& w = words[0];
    if (auto r = parse_integer_word(w)) return *r;
    if (auto r = parse_fraction_word(w)) return *r;
    const auto dot = w.find('.');
    if (dot != std::string::npos) {
      const std::string int_part = w.substr(0, dot);
      const std::string frac_part = w.substr(dot + 1);
      if ((int_part.empty() || all_digits(int_part)) && all_digits(frac_part) &&
          frac_part.size() <= 9 && int_part.size() <= 9) {
        std::int64_t den = 1;
        for (std::size_t i = 0; i < frac_part.size(); ++i) den *= 10;
        const std::int64_t whole = int_part.empty() ? 0 : std::stoll(int_part);
        return Rational(whole * den + std::stoll(frac_part), den);
      }
    }
  }
  throw ValidationError("unreadable quantity '" + std::string(text) + "'");
}

std::string Rational::to_string() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

std::string Rational::to_mixed_string() const {
  if (den_ == 1 || num_ < den_) return to_string();
  return std::to_string(num_ / den_) + " " + std::to_string(num_ % den_) + "/" +
         std::to_string(den_);
}

TaggedDocument TaggedDocument::from_text(std::string text, std::size_t recipe_count) {
  TaggedDocument doc;
  doc.char_len = utf8_length(text);
  doc.text = std::move(text);
  doc.recipe_count = recipe_count;
  return doc;
}

CorpusFormat parse_corpus_format(std::string_view name) {
  if (name == "record-lines" || name == "jsonl") return CorpusFormat::record_lines;
  if (name == "delimited-table" || name == "tsv") return CorpusFormat::delimited_table;
  throw ValidationError("unknown corpus format '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Ingredient lines

bool is_known_unit(std::string_view word) {
  const std::string lower = to_lower(word);
  return std::find(kUnits.begin(), kUnits.end(), lower) != kUnits.end();
}

std::string render_ingredient(const IngredientLine& line) {
  std::vector<std::string> parts;
  if (line.quantity) parts.push_back(line.quantity->to_mixed_string());
  if (!line.unit.empty()) parts.push_back(line.unit);
  if (!line.name.empty()) parts.push_back(line.name);
  return clean_text(join(parts, " "));
}

IngredientLine parse_ingredient(std::string_view text) {
  const auto words = split_whitespace(ascii_fractions(text));
  IngredientLine line;
  std::size_t i = 0;
  if (words.size() >= 2) {
    if (auto whole = parse_integer_word(words[0])) {
      line.quantity = *whole;
      i = 1;
      if (words.size() >= 3) {
        if (auto frac = parse_fraction_word(words[1]);
            frac && frac->numerator() < frac->denominator() && frac->numerator() > 0) {
          line.quantity = Rational(whole->numerator() * frac->denominator() + frac->numerator(),
                                   frac->denominator());
          i = 2;
        }
      }
    } else if (auto frac = parse_fraction_word(words[0])) {
      line.quantity = *frac;
      i = 1;
    }
  }
  if (words.size() - i >= 2 && is_known_unit(words[i])) {
    line.unit = words[i];
    ++i;
  }
  std::vector<std::string> rest(words.begin() + static_cast<std::ptrdiff_t>(i), words.end());
  line.name = join(rest, " ");
  return line;
}

IngredientLine canonical_ingredient(const IngredientLine& line) {
  return parse_ingredient(render_ingredient(line));
}

RecipeRecord canonical_record(RecipeRecord record) {
  record.title = clean_text(record.title);
  for (auto& line : record.ingredients) line = canonical_ingredient(line);
  for (auto& step : record.instructions) step = clean_text(step);
  return record;
}

std::vector<std::string> violations(const RecipeRecord& record) {
  std::vector<std::string> out;
  if (record.id.empty()) out.emplace_back("empty id");
  if (record.title.empty()) out.emplace_back("empty title");
  if (record.ingredients.empty()) out.emplace_back("no ingredients");
  if (record.instructions.empty()) out.emplace_back("no instructions");
  for (const auto& line : record.ingredients) {
    if (line.name.empty()) {
      out.emplace_back("ingredient without a name");
      break;
    }
  }
  for (const auto& step : record.instructions) {
    if (step.empty()) {
      out.emplace_back("empty instruction step");
      break;
    }
  }
  bool reserved = contains_special(record.title);
  for (const auto& line : record.ingredients) {
    reserved = reserved || contains_special(line.unit) || contains_special(line.name);
  }
  for (const auto& step : record.instructions) reserved = reserved || contains_special(step);
  if (reserved) out.emplace_back("text contains a reserved token");
  if (out.empty() && canonical_record(record) != record) out.emplace_back("not in canonical form");
  return out;
}

bool is_valid(const RecipeRecord& record) { return violations(record).empty(); }

// ---------------------------------------------------------------------------
// Ingest / export

namespace {

std::optional<Rational> quantity_from_json(const nlohmann::json& q) {
  if (q.is_null()) return std::nullopt;
  if (q.is_string()) {
    const auto s = collapse_whitespace(q.get<std::string>());
    if (s.empty()) return std::nullopt;
    return Rational::parse(s);
  }
  if (q.is_number_unsigned() || q.is_number_integer()) {
    return Rational(q.get<std::int64_t>(), 1);
  }
  if (q.is_number_float()) return Rational::parse(q.dump());
  throw ValidationError("quantity must be a string, number or null");
}

RecipeRecord record_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("row is not an object");
  RecipeRecord r;
  if (!j.contains("id") || j["id"].is_null()) throw ValidationError("missing id");
  r.id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
  if (!j.contains("title") || !j["title"].is_string()) throw ValidationError("missing title");
  r.title = j["title"].get<std::string>();
  if (!j.contains("ingredients") || !j["ingredients"].is_array()) {
    throw ValidationError("missing ingredients array");
  }
  for (const auto& item : j["ingredients"]) {
    if (item.is_string()) {
      r.ingredients.push_back(parse_ingredient(item.get<std::string>()));
      continue;
    }
    if (!item.is_object()) throw ValidationError("ingredient is not an object");
    IngredientLine line;
    if (item.contains("quantity")) line.quantity = quantity_from_json(item["quantity"]);
    if (item.contains("unit") && !item["unit"].is_null()) {
      if (!item["unit"].is_string()) throw ValidationError("unit must be a string");
      line.unit = item["unit"].get<std::string>();
    }
    if (!item.contains("name") || !item["name"].is_string()) {
      throw ValidationError("ingredient missing name");
    }
    line.name = item["name"].get<std::string>();
    r.ingredients.push_back(std::move(line));
  }
  if (!j.contains("instructions") || !j["instructions"].is_array()) {
    throw ValidationError("missing instructions array");
  }
  for (const auto& step : j["instructions"]) {
    if (!step.is_string()) throw ValidationError("instruction is not a string");
    r.instructions.push_back(step.get<std::string>());
  }
  return canonical_record(std::move(r));
}

// Delimited table: tab-separated columns id, title, ingredients,
// instructions. List items are separated by '|', ingredient components by
// ';'. Backslash escapes \t \n \\ \| \;.
std::string escape_cell(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\\': out += "\\\\"; break;
      case '|': out += "\\|"; break;
      case ';': out += "\\;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string unescape_all(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      const char n = s[++i];
      out.push_back(n == 't' ? '\t' : n == 'n' ? '\n' : n);
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

// Raw split on unescaped `sep`, escapes left intact.
std::vector<std::string> split_raw(std::string_view s, char sep) {
  std::vector<std::string> parts(1);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      parts.back().push_back(s[i]);
      parts.back().push_back(s[++i]);
    } else if (s[i] == sep) {
      parts.emplace_back();
    } else {
      parts.back().push_back(s[i]);
    }
  }
  return parts;
}

RecipeRecord record_from_row(std::string_view row) {
  const auto cols = split_raw(row, '\t');
  if (cols.size() != 4) throw ValidationError("expected 4 columns, got " + std::to_string(cols.size()));
  RecipeRecord r;
  r.id = unescape_all(cols[0]);
  if (r.id.empty()) throw ValidationError("missing id");
  r.title = unescape_all(cols[1]);
  if (!cols[2].empty()) {
    for (const auto& item : split_raw(cols[2], '|')) {
      const auto comps = split_raw(item, ';');
      if (comps.size() != 3) throw ValidationError("ingredient needs quantity;unit;name");
      IngredientLine line;
      const auto q = collapse_whitespace(unescape_all(comps[0]));
      if (!q.empty()) line.quantity = Rational::parse(q);
      line.unit = unescape_all(comps[1]);
      line.name = unescape_all(comps[2]);
      r.ingredients.push_back(std::move(line));
    }
  }
  if (!cols[3].empty()) {
    for (const auto& step : split_raw(cols[3], '|')) r.instructions.push_back(unescape_all(step));
  }
  return canonical_record(std::move(r));
}

constexpr std::string_view kTableHeader = "id\ttitle\tingredients\tinstructions";

}  // namespace

IngestResult ingest_text(std::string_view content, CorpusFormat format) {
  IngestResult result;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header_seen = false;
  while (pos <= content.size()) {
    auto end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    std::string_view row = content.substr(pos, end - pos);
    if (!row.empty() && row.back() == '\r') row.remove_suffix(1);
    ++line_no;
    pos = end + 1;
    if (collapse_whitespace(row).empty()) {
      if (end == content.size()) break;
      continue;
    }
    try {
      if (format == CorpusFormat::record_lines) {
        result.records.push_back(record_from_json(nlohmann::json::parse(row)));
      } else {
        if (!header_seen && row == kTableHeader) {
          header_seen = true;
          continue;
        }
        header_seen = true;
        result.records.push_back(record_from_row(row));
      }
    } catch (const nlohmann::json::exception& e) {
      result.rejects.push_back({line_no, std::string("malformed JSON: ") + e.what()});
    } catch (const ValidationError& e) {
      result.rejects.push_back({line_no, e.what()});
    }
    if (end == content.size()) break;
  }
  if (result.records.empty()) throw EmptyCorpusError("no parseable records");
  return result;
}

IngestResult ingest(const std::filesystem::path& path, CorpusFormat format) {
  return ingest_text(read_file(path), format);
}

std::string to_record_line(const RecipeRecord& record) {
  ordered_json j;
  j["id"] = record.id;
  j["title"] = record.title;
  j["ingredients"] = ordered_json::array();
  for (const auto& line : record.ingredients) {
    ordered_json item;
    item["quantity"] = line.quantity ? ordered_json(line.quantity->to_string()) : ordered_json(nullptr);
    item["unit"] = line.unit;
    item["name"] = line.name;
    j["ingredients"].push_back(std::move(item));
  }
  j["instructions"] = record.instructions;
  return j.dump();
}

std::string export_text(std::span<const RecipeRecord> records, CorpusFormat format) {
  std::string out;
  if (format == CorpusFormat::record_lines) {
    for (const auto& r : records) {
      out += to_record_line(r);
      out.push_back('\n');
    }
    return out;
  }
  out += kTableHeader;
  out.push_back('\n');
  for (const auto& r : records) {
    out += escape_cell(r.id);
    out.push_back('\t');
    out += escape_cell(r.title);
    out.push_back('\t');
    for (std::size_t i = 0; i < r.ingredients.size(); ++i) {
      const auto& line = r.ingredients[i];
      if (i) out.push_back('|');
      if (line.quantity) out += line.quantity->to_string();
      out.push_back(';');
      out += escape_cell(line.unit);
      out.push_back(';');
      out += escape_cell(line.name);
    }
    out.push_back('\t');
    for (std::size_t i = 0; i < r.instructions.size(); ++i) {
      if (i) out.push_back('|');
      out += escape_cell(r.instructions[i]);
    }
    out.push_back('\n');
  }
  return out;
}

void export_records(std::span<const RecipeRecord> records, const std::filesystem::path& path,
                    CorpusFormat format) {
  write_file_atomic(path, export_text(records, format));
}

// ---------------------------------------------------------------------------
// Cleaning

CleanResult clean(std::span<const RecipeRecord> records) {
  CleanResult result;
  std::set<std::string> seen_keys;
  std::set<std::string> seen_ids;
  for (const auto& r : records) {
    if (!is_valid(r)) {
      result.rejected.push_back({r.id, "incomplete"});
      continue;
    }
    std::vector<std::string> names;
    names.reserve(r.ingredients.size());
    for (const auto& line : r.ingredients) names.push_back(to_lower(collapse_whitespace(line.name)));
    std::sort(names.begin(), names.end());
    std::string key = to_lower(collapse_whitespace(r.title));
    key.push_back('\x1f');
    key += join(names, "\x1e");
    if (seen_ids.count(r.id) || !seen_keys.insert(key).second) {
      result.rejected.push_back({r.id, "redundant"});
      continue;
    }
    seen_ids.insert(r.id);
    result.kept.push_back(r);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Length statistics and windowing

CorpusStats length_stats(std::span<const std::size_t> lengths, std::size_t bins) {
  if (lengths.empty()) throw EmptyCorpusError("length_stats needs at least one document");
  CorpusStats s;
  // Welford's update.
  double mean = 0.0;
  double m2 = 0.0;
  s.min_len = lengths.front();
  s.max_len = lengths.front();
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    const double x = static_cast<double>(lengths[i]);
    const double delta = x - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (x - mean);
    s.min_len = std::min(s.min_len, lengths[i]);
    s.max_len = std::max(s.max_len, lengths[i]);
  }
  s.n = lengths.size();
  s.mean_len = mean;
  s.std_len = std::sqrt(std::max(0.0, m2 / static_cast<double>(s.n)));
  bins = std::max<std::size_t>(1, bins);
  const std::size_t span = s.max_len - s.min_len + 1;
  s.bin_width = std::max<std::size_t>(1, (span + bins - 1) / bins);
  s.histogram.assign((span + s.bin_width - 1) / s.bin_width, 0);
  for (auto len : lengths) ++s.histogram[(len - s.min_len) / s.bin_width];
  return s;
}

CorpusStats length_stats(std::span<const TaggedDocument> docs, std::size_t bins) {
  std::vector<std::size_t> lengths;
  lengths.reserve(docs.size());
  for (const auto& d : docs) lengths.push_back(d.char_len);
  return length_stats(std::span<const std::size_t>(lengths), bins);
}

namespace {

double window_upper(const CorpusStats& stats, std::size_t hard_cap) {
  return std::min(static_cast<double>(hard_cap), stats.mean_len + 2.0 * stats.std_len);
}

double short_threshold(const CorpusStats& stats) {
  return std::max(1.0, stats.mean_len - 3.0 * stats.std_len);
}

}  // namespace

WindowResult select_window(std::span<const TaggedDocument> docs, const CorpusStats& stats,
                           std::size_t hard_cap) {
  WindowResult result;
  const double upper = window_upper(stats, hard_cap);
  const double lower = stats.mean_len - 2.0 * stats.std_len;
  for (const auto& d : docs) {
    const auto len = static_cast<double>(d.char_len);
    if (len > upper) {
      result.dropped.push_back(d);
      continue;
    }
    if (len < lower) ++result.short_count;
    result.kept.push_back(d);
  }
  return result;
}

std::vector<TaggedDocument> merge_short(std::span<const TaggedDocument> docs,
                                        const CorpusStats& stats, std::size_t hard_cap) {
  const double threshold = short_threshold(stats);
  const double target = stats.mean_len - stats.std_len;
  std::vector<TaggedDocument> out;
  std::optional<std::size_t> open;  // index in `out` of the group being filled
  for (const auto& d : docs) {
    if (static_cast<double>(d.char_len) >= threshold) {
      out.push_back(d);
      continue;
    }
    if (open && out[*open].char_len + d.char_len > hard_cap) open.reset();
    if (!open) {
      out.push_back(d);
      open = out.size() - 1;
    } else {
      auto& group = out[*open];
      group.text += d.text;
      group.char_len += d.char_len;
      group.recipe_count += d.recipe_count;
    }
    if (static_cast<double>(out[*open].char_len) >= target) open.reset();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tagged grammar

TaggedDocument serialize(const RecipeRecord& record) {
  if (auto v = violations(record); !v.empty()) {
    throw ValidationError("cannot serialize recipe '" + record.id + "': " + v.front());
  }
  std::string text;
  text += tags::recipe_start;
  text.push_back(' ');
  text += tags::ingr_start;
  for (std::size_t i = 0; i < record.ingredients.size(); ++i) {
    text.push_back(' ');
    if (i) {
      text += tags::next_ingr;
      text.push_back(' ');
    }
    text += normalize_numbers(render_ingredient(record.ingredients[i]));
  }
  text.push_back(' ');
  text += tags::ingr_end;
  text.push_back(' ');
  text += tags::title_start;
  text.push_back(' ');
  text += normalize_numbers(record.title);
  text.push_back(' ');
  text += tags::title_end;
  text.push_back(' ');
  text += tags::instr_start;
  for (std::size_t i = 0; i < record.instructions.size(); ++i) {
    text.push_back(' ');
    if (i) {
      text += tags::next_instr;
      text.push_back(' ');
    }
    text += normalize_numbers(record.instructions[i]);
  }
  text.push_back(' ');
  text += tags::instr_end;
  text.push_back(' ');
  text += tags::recipe_end;
  return TaggedDocument::from_text(std::move(text));
}

namespace {

struct Piece {
  bool is_tag = false;
  std::string_view value;
};

// Splits `text` into control tags and the text between them. Fraction
// tokens stay inside text pieces.
std::vector<Piece> lex(std::string_view text) {
  std::vector<Piece> pieces;
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '<') {
      if (auto s = match_special(text, i); s && !find_fraction_token(*s)) {
        if (i > start) pieces.push_back({false, text.substr(start, i - start)});
        pieces.push_back({true, *s});
        i += s->size();
        start = i;
        continue;
      }
    }
    ++i;
  }
  if (start < text.size()) pieces.push_back({false, text.substr(start)});
  return pieces;
}

std::string piece_text(std::string_view raw) { return collapse_whitespace(denormalize_numbers(raw)); }

}  // namespace

ParseResult parse(std::string_view text) {
  const auto begin = text.find(tags::recipe_start);
  if (begin == std::string_view::npos) throw UnparseableError("no recipe-start tag");
  auto body = text.substr(begin + tags::recipe_start.size());
  if (auto next = body.find(tags::recipe_start); next != std::string_view::npos) {
    body = body.substr(0, next);
  }

  ParseResult result;
  bool malformed = false;
  std::optional<Section> open;
  std::vector<Section> opened;
  std::vector<std::string> items;  // terminated items of the open section
  std::string pending;             // text since the last tag inside the section
  bool finished = false;

  auto separator_for = [](Section s) -> std::string_view {
    return s == Section::ingredients ? tags::next_ingr
           : s == Section::instructions ? tags::next_instr
                                        : std::string_view{};
  };
  auto end_for = [](Section s) -> std::string_view {
    return s == Section::ingredients ? tags::ingr_end
           : s == Section::title    ? tags::title_end
                                    : tags::instr_end;
  };
  auto terminate_item = [&] {
    auto t = piece_text(pending);
    pending.clear();
    if (t.empty()) {
      malformed = true;
      return;
    }
    items.push_back(std::move(t));
  };
  auto commit = [&](Section s, bool closed) {
    if (std::find(result.recovered.begin(), result.recovered.end(), s) != result.recovered.end()) {
      malformed = true;  // repeated section; the first one wins
    } else {
      if (closed) result.recovered.push_back(s);
      switch (s) {
        case Section::ingredients:
          for (const auto& item : items) result.record.ingredients.push_back(parse_ingredient(item));
          break;
        case Section::title:
          if (items.size() == 1) {
            result.record.title = items.front();
          } else if (!items.empty()) {
            malformed = true;
          }
          break;
        case Section::instructions:
          for (auto& item : items) result.record.instructions.push_back(item);
          break;
      }
    }
    if (!closed) malformed = true;
    items.clear();
    open.reset();
  };

  for (const auto& piece : lex(body)) {
    if (!piece.is_tag) {
      if (open) {
        pending += piece.value;
      } else if (!collapse_whitespace(piece.value).empty()) {
        malformed = true;
      }
      continue;
    }
    const auto tag = piece.value;
    if (open) {
      if (tag == separator_for(*open) && !separator_for(*open).empty()) {
        terminate_item();
        continue;
      }
      if (tag == end_for(*open)) {
        terminate_item();
        commit(*open, true);
        continue;
      }
      // Any other tag ends the open section without its closing tag.
      terminate_item();
      commit(*open, false);
    }
    if (tag == tags::ingr_start || tag == tags::title_start || tag == tags::instr_start) {
      const Section s = tag == tags::ingr_start    ? Section::ingredients
                        : tag == tags::title_start ? Section::title
                                                   : Section::instructions;
      open = s;
      opened.push_back(s);
      pending.clear();
    } else if (tag == tags::recipe_end) {
      finished = true;
      break;
    } else {
      malformed = true;  // stray separator or end tag
    }
  }
  if (open) {
    // Truncated inside a section: the unterminated fragment is dropped.
    pending.clear();
    commit(*open, false);
  }
  const std::vector<Section> canonical_order = {Section::ingredients, Section::title,
                                                Section::instructions};
  if (!finished || opened != canonical_order || result.recovered.size() != 3) malformed = true;
  result.malformed = malformed;
  return result;
}

std::vector<std::string_view> split_recipes(std::string_view text) {
  std::vector<std::string_view> out;
  auto pos = text.find(tags::recipe_start);
  while (pos != std::string_view::npos) {
    auto next = text.find(tags::recipe_start, pos + tags::recipe_start.size());
    out.push_back(text.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
    pos = next;
  }
  return out;
}

std::string strip_tags(std::string_view text) {
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '<') {
      if (auto s = match_special(text, i)) {
        if (const auto* f = find_fraction_token(*s)) {
          out += std::to_string(f->numerator) + "/" + std::to_string(f->denominator);
        } else {
          out.push_back(' ');
        }
        i += s->size();
        continue;
      }
    }
    out.push_back(text[i++]);
  }
  return collapse_whitespace(out);
}

std::string flatten_record(const RecipeRecord& record) {
  std::vector<std::string> parts;
  parts.push_back(record.title);
  for (const auto& line : record.ingredients) parts.push_back(render_ingredient(line));
  for (const auto& step : record.instructions) parts.push_back(step);
  return collapse_whitespace(join(parts, " "));
}

// ---------------------------------------------------------------------------
// Pipeline

std::string PrepReport::to_text() const {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed;
  os << "ingested: " << ingested << '\n'
     << "ingest_rejects: " << ingest_rejects << '\n'
     << "rejected_incomplete: " << incomplete << '\n'
     << "rejected_redundant: " << redundant << '\n'
     << "kept_records: " << kept_records << '\n'
     << "heldout_records: " << heldout_records << '\n'
     << "dropped_overlength: " << dropped_overlength << '\n'
     << "short_docs: " << short_docs << '\n'
     << "merged_groups: " << merged_groups << '\n'
     << "output_docs: " << output_docs << '\n'
     << "output_recipes: " << output_recipes << '\n'
     << "mean_len: " << before_window.mean_len << '\n'
     << "std_len: " << before_window.std_len << '\n'
     << "window_mean_len: " << after_window.mean_len << '\n'
     << "window_std_len: " << after_window.std_len << '\n';
  return os.str();
}

PrepResult prepare(const IngestResult& ingested, const PrepOptions& options) {
  PrepResult result;
  result.ingest_rejects = ingested.rejects;
  auto cleaned = clean(ingested.records);
  result.rejected = cleaned.rejected;

  std::vector<TaggedDocument> docs;
  docs.reserve(cleaned.kept.size());
  for (const auto& r : cleaned.kept) docs.push_back(serialize(r));
  if (docs.empty()) throw EmptyCorpusError("no records survived cleaning");

  const auto before = length_stats(docs, options.histogram_bins);
  const double upper = window_upper(before, options.hard_cap);
  std::vector<TaggedDocument> kept;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const auto& record = cleaned.kept[i];
    if (static_cast<double>(docs[i].char_len) > upper) {
      result.dropped_ids.push_back(record.id);
      continue;
    }
    if (options.split_heldout && is_heldout_id(record.id)) {
      result.heldout.push_back(record);
      continue;
    }
    kept.push_back(docs[i]);
    result.records.push_back(record);
  }
  if (kept.empty()) throw EmptyCorpusError("every document exceeded the length window");
  const auto after = length_stats(kept, options.histogram_bins);

  auto& rep = result.report;
  rep.ingested = ingested.records.size();
  rep.ingest_rejects = ingested.rejects.size();
  for (const auto& r : cleaned.rejected) (r.reason == "incomplete" ? rep.incomplete : rep.redundant)++;
  rep.kept_records = kept.size();
  rep.heldout_records = result.heldout.size();
  rep.dropped_overlength = result.dropped_ids.size();
  rep.short_docs = static_cast<std::size_t>(
      std::count_if(kept.begin(), kept.end(), [&](const TaggedDocument& d) {
        return static_cast<double>(d.char_len) < short_threshold(after);
      }));
  rep.before_window = before;
  rep.after_window = after;

  result.docs = options.merge ? merge_short(kept, after, options.hard_cap) : kept;
  rep.output_docs = result.docs.size();
  for (const auto& d : result.docs) {
    rep.output_recipes += d.recipe_count;
    if (d.recipe_count > 1) ++rep.merged_groups;
  }
  return result;
}

void write_documents(std::span<const TaggedDocument> docs, const std::filesystem::path& path) {
  std::string out;
  for (const auto& d : docs) {
    if (d.text.find('\n') != std::string::npos) {
      throw ValidationError("tagged document contains a newline");
    }
    out += d.text;
    out.push_back('\n');
  }
  write_file_atomic(path, out);
}

std::vector<TaggedDocument> read_documents(const std::filesystem::path& path) {
  const auto content = read_file(path);
  std::vector<TaggedDocument> docs;
  std::istringstream is(content);
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (collapse_whitespace(line).empty()) continue;
    const auto count = split_recipes(line).size();
    docs.push_back(TaggedDocument::from_text(line, std::max<std::size_t>(1, count)));
  }
  if (docs.empty()) throw EmptyCorpusError("no documents in " + path.string());
  return docs;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading " + path.string());
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("error writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

bool is_heldout_id(std::string_view id) { return fnv1a64(id) % 10 == 0; }

}  // namespace recipegen
