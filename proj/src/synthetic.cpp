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

#include "recipegen/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <random>
#include <set>
#include <string_view>

#include "recipegen/errors.hpp"
#include "recipegen/rng.hpp"

namespace recipegen {

namespace {

constexpr std::array<std::string_view, 20> kAdjectives = {
    "Rustic", "Smoky",   "Golden", "Creamy", "Spicy",  "Tangy",    "Herbed",  "Roasted", "Crispy",  "Zesty",
    "Savory", "Hearty",  "Simple", "Classic", "Country", "Glazed", "Charred", "Braised", "Toasted", "Summer"};
constexpr std::array<std::string_view, 30> kMains = {
    "Chicken", "Lentil",  "Mushroom", "Salmon",  "Chickpea", "Pumpkin", "Tofu",    "Beef",    "Eggplant", "Shrimp",
    "Potato",  "Spinach", "Barley",   "Carrot",  "Tomato",   "Cabbage", "Quinoa",  "Pork",    "Zucchini", "Bean",
    "Corn",    "Leek",    "Apple",    "Pear",    "Turkey",   "Cod",     "Pepper",  "Onion",   "Fennel",   "Rice"};
constexpr std::array<std::string_view, 12> kDishes = {"Stew",  "Salad", "Soup",   "Bake",   "Skillet", "Curry",
                                                      "Pilaf", "Tart",  "Gratin", "Stir Fry", "Bowl",  "Casserole"};
constexpr std::array<std::string_view, 32> kIngredients = {
    "olive oil",    "garlic",      "yellow onion", "sea salt",    "black pepper", "butter",   "all-purpose flour",
    "whole milk",   "chicken stock", "paprika",    "ground cumin", "fresh thyme", "bay leaf", "lemon juice",
    "brown sugar",  "honey",       "soy sauce",    "ginger",       "red chili",   "parsley",  "heavy cream",
    "white wine",   "celery",      "carrots",      "basil",        "oregano",     "rosemary", "cider vinegar",
    "dijon mustard", "parmesan",   "cornstarch",   "scallions"};
constexpr std::array<std::string_view, 9> kUnits = {"cup", "tbsp", "tsp", "oz", "lb", "g", "clove", "pinch", "can"};
constexpr std::array<std::string_view, 9> kQuantities = {"1", "2", "3", "1/2", "1/4", "3/4", "1 1/2", "1/3", "4"};
constexpr std::array<std::string_view, 24> kSteps = {
    "Preheat the oven to 200 degrees and grease a large baking dish.",
    "Heat the oil in a heavy pan over medium heat until it shimmers.",
    "Add the onion and cook, stirring often, until soft and translucent.",
    "Stir in the garlic and spices and cook for one minute until fragrant.",
    "Pour in the stock, scrape the bottom of the pan and bring to a simmer.",
    "Cover and cook gently for twenty minutes, stirring now and then.",
    "Season to taste with salt and pepper and adjust the acidity with lemon.",
    "Whisk the flour into the butter and cook until it smells nutty.",
    "Slowly add the milk, whisking constantly so no lumps form.",
    "Fold in the herbs and let the mixture rest for five minutes.",
    "Transfer everything to the baking dish and smooth the top.",
    "Bake until bubbling at the edges and browned on top.",
    "Toss the vegetables with oil, salt and pepper on a sheet pan.",
    "Roast, turning once, until tender and caramelized in spots.",
    "Meanwhile, bring a pot of salted water to a rolling boil.",
    "Cook the grains until just tender, then drain well.",
    "Combine the dressing ingredients in a jar and shake to emulsify.",
    "Sear the protein on both sides until a deep crust forms.",
    "Deglaze with the wine and let it reduce by half.",
    "Return everything to the pan and warm through.",
    "Garnish with the scallions and a drizzle of oil.",
    "Let cool slightly before slicing into portions.",
    "Serve hot with crusty bread or steamed rice.",
    "Leftovers keep in the refrigerator for three days."};

template <typename C>
const auto& pick(const C& items, std::mt19937_64& rng) {
  return items[static_cast<std::size_t>(uniform01(rng) * static_cast<double>(items.size()))];
}

std::size_t below(std::size_t n, std::mt19937_64& rng) {
  return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
}

std::string make_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "syn-%05zu", i);
  return buf;
}

IngredientLine random_ingredient(std::string_view name, std::mt19937_64& rng) {
  IngredientLine line;
  line.name = name;
  if (uniform01(rng) < 0.85) {
    line.quantity = Rational::parse(pick(kQuantities, rng));
    if (uniform01(rng) < 0.8) line.unit = pick(kUnits, rng);
  }
  return canonical_ingredient(line);
}

std::size_t doc_len(RecipeRecord r) {
  r.id = "probe";
  return serialize(r).char_len;
}

class Builder {
 public:
  explicit Builder(std::uint64_t seed) : rng_(seed) {}

  std::string unique_title() {
    while (true) {
      std::string t = std::string(pick(kAdjectives, rng_)) + " " + std::string(pick(kMains, rng_)) + " " +
                      std::string(pick(kDishes, rng_));
      if (titles_.insert(t).second) return t;
    }
  }

  RecipeRecord base(std::size_t n_ingredients) {
    RecipeRecord r;
    r.title = unique_title();
    std::vector<std::string_view> names(kIngredients.begin(), kIngredients.end());
    for (std::size_t i = 0; i < n_ingredients; ++i) {
      const std::size_t k = below(names.size(), rng_);
      r.ingredients.push_back(random_ingredient(names[k], rng_));
      names.erase(names.begin() + static_cast<std::ptrdiff_t>(k));
    }
    return r;
  }

  /// Appends steps until the serialized length reaches `target`.
  RecipeRecord with_length(std::size_t target) {
    RecipeRecord r = base(4 + below(6, rng_));
    std::size_t next = below(kSteps.size(), rng_);
    do {
      r.instructions.emplace_back(kSteps[next % kSteps.size()]);
      next += 1 + below(3, rng_);
    } while (doc_len(r) < target);
    return r;
  }

  RecipeRecord short_recipe() {
    static constexpr std::array<std::string_view, 6> kShortSteps = {"Mix well.", "Serve cold.", "Stir and serve.",
                                                                    "Toast lightly.", "Blend smooth.", "Chill."};
    RecipeRecord r;
    r.title = unique_title();
    r.ingredients.push_back(canonical_ingredient({std::nullopt, "", std::string(pick(kIngredients, rng_))}));
    r.instructions.emplace_back(pick(kShortSteps, rng_));
    return r;
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
  std::set<std::string> titles_;
};

std::string recase(std::string title) {
  for (auto& c : title) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return title;
}

}  // namespace

SynthCorpus synthesize_corpus(const SynthOptions& options) {
  const std::size_t planted =
      options.duplicates + options.incomplete + options.overlength + options.short_docs;
  if (planted > options.total) throw ValidationError("planted defects exceed the corpus size");
  Builder b(options.seed);

  struct Entry {
    RecipeRecord record;
    enum Kind { regular, overlength, short_doc } kind;
  };
  std::vector<Entry> base;
  const std::size_t regular = options.total - planted;
  for (std::size_t i = 0; i < regular; ++i) {
    // Steps add at most ~75 chars past the target, keeping regular docs <= 1400.
    base.push_back({b.with_length(600 + below(700, b.rng())), Entry::regular});
  }
  for (std::size_t i = 0; i < options.overlength; ++i) {
    base.push_back({b.with_length(2050 + below(400, b.rng())), Entry::overlength});
  }
  for (std::size_t i = 0; i < options.short_docs; ++i) base.push_back({b.short_recipe(), Entry::short_doc});
  std::shuffle(base.begin(), base.end(), b.rng());

  // Duplicates copy regular records and are inserted after their source.
  std::vector<std::pair<Entry, bool>> ordered;  // bool: planted duplicate
  for (auto& e : base) ordered.emplace_back(std::move(e), false);
  for (std::size_t d = 0; d < options.duplicates; ++d) {
    std::size_t src;
    do {
      src = below(ordered.size(), b.rng());
    } while (ordered[src].first.kind != Entry::regular || ordered[src].second);
    Entry copy = ordered[src].first;
    copy.record.title = d % 2 == 0 ? recase(copy.record.title) : copy.record.title;
    const std::size_t at = src + 1 + below(ordered.size() - src, b.rng());
    ordered.insert(ordered.begin() + static_cast<std::ptrdiff_t>(at), {std::move(copy), true});
  }

  SynthCorpus out;
  std::vector<std::size_t> incomplete_slots;
  for (std::size_t i = 0; i < options.incomplete; ++i) incomplete_slots.push_back(below(ordered.size() + 1, b.rng()));
  std::sort(incomplete_slots.begin(), incomplete_slots.end());

  std::size_t next_id = 1;
  std::size_t slot = 0;
  std::size_t flaw = 0;
  auto emit_incomplete = [&] {
    RecipeRecord r = b.with_length(600);
    switch (flaw++ % 4) {
      case 0:
        r.instructions.clear();
        break;
      case 1:
        r.title.clear();
        break;
      case 2:
        r.ingredients.clear();
        break;
      default:
        r.instructions.back().clear();
        break;
    }
    r.id = make_id(next_id++);
    out.incomplete_ids.push_back(r.id);
    out.records.push_back(std::move(r));
  };
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    while (slot < incomplete_slots.size() && incomplete_slots[slot] == i) {
      emit_incomplete();
      ++slot;
    }
    auto& [entry, duplicate] = ordered[i];
    entry.record.id = make_id(next_id++);
    if (duplicate) {
      out.duplicate_ids.push_back(entry.record.id);
    } else if (entry.kind == Entry::overlength) {
      out.overlength_ids.push_back(entry.record.id);
    } else if (entry.kind == Entry::short_doc) {
      out.short_ids.push_back(entry.record.id);
    }
    out.records.push_back(std::move(entry.record));
  }
  while (slot++ < incomplete_slots.size()) emit_incomplete();
  return out;
}

}  // namespace recipegen
