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
// Python extension exposing corpus preparation, training, generation and
// scoring. Long-running calls release the GIL; models are immutable once
// trained, so generate() may be called from several Python threads.

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "recipegen/bleu.hpp"
#include "recipegen/checkpoint.hpp"
#include "recipegen/corpus.hpp"
#include "recipegen/errors.hpp"
#include "recipegen/eval.hpp"
#include "recipegen/generator.hpp"
#include "recipegen/synthetic.hpp"
#include "recipegen/trainer.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace recipegen;

namespace {

std::string section_name(Section s) {
  switch (s) {
    case Section::ingredients: return "ingredients";
    case Section::title: return "title";
    case Section::instructions: return "instructions";
  }
  return "unknown";
}

nn::Model create_model(const std::string& kind, const std::vector<TaggedDocument>& docs, const RunConfig& run,
                       std::optional<std::uint64_t> seed) {
  VocabMode mode = VocabMode::character;
  nn::ModelConfig config;
  if (kind == "char-lstm" || kind == "word-lstm") {
    mode = kind == "char-lstm" ? VocabMode::character : VocabMode::word;
    config = run.lstm;
  } else if (kind == "transformer") {
    mode = run.transformer_vocab;
    config = run.transformer;
  } else {
    throw ValidationError("unknown model '" + kind + "' (expected char-lstm, word-lstm or transformer)");
  }
  return init_model(config, mode, run.min_freq, docs, seed.value_or(run.train.seed));
}

std::string model_kind_name(const nn::Model& m) {
  if (m.kind() == nn::ModelKind::transformer) return "transformer";
  return m.vocab().mode() == VocabMode::word ? "word-lstm" : "char-lstm";
}

}  // namespace

PYBIND11_MODULE(_recipegen, m) {
  m.doc() = "Ingredient-conditioned recipe generation: corpus prep, training, sampling and BLEU.";

  // Translators run most recently registered first, so the base goes first.
  static py::exception<Error> base(m, "RecipegenError");
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<EmptyCorpusError>(m, "EmptyCorpusError", base.ptr());
  py::register_exception<UnparseableError>(m, "UnparseableError", base.ptr());
  py::register_exception<ContextOverflowError>(m, "ContextOverflowError", base.ptr());
  py::register_exception<InsufficientDataError>(m, "InsufficientDataError", base.ptr());
  py::register_exception<DivergenceError>(m, "DivergenceError", base.ptr());
  py::register_exception<CompatibilityError>(m, "CompatibilityError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());

  // --- corpus ---------------------------------------------------------------
  py::class_<IngredientLine>(m, "IngredientLine")
      .def(py::init([](std::optional<std::string> quantity, std::string unit, std::string name) {
             IngredientLine l;
             if (quantity) l.quantity = Rational::parse(*quantity);
             l.unit = std::move(unit);
             l.name = std::move(name);
             return l;
           }),
           py::arg("quantity") = py::none(), py::arg("unit") = "", py::arg("name") = "")
      .def_static("parse", &parse_ingredient, py::arg("text"))
      .def_property_readonly("quantity",
                             [](const IngredientLine& l) -> std::optional<std::string> {
                               if (!l.quantity) return std::nullopt;
                               return l.quantity->to_string();
                             })
      .def_readwrite("unit", &IngredientLine::unit)
      .def_readwrite("name", &IngredientLine::name)
      .def("__eq__", [](const IngredientLine& a, const IngredientLine& b) { return a == b; })
      .def("__str__", &render_ingredient)
      .def("__repr__", [](const IngredientLine& l) { return "<IngredientLine '" + render_ingredient(l) + "'>"; });

  py::class_<RecipeRecord>(m, "Recipe")
      .def(py::init([](std::string id, std::string title, std::vector<IngredientLine> ingredients,
                       std::vector<std::string> instructions) {
             return RecipeRecord{std::move(id), std::move(title), std::move(ingredients), std::move(instructions)};
           }),
           py::arg("id") = "", py::arg("title") = "", py::arg("ingredients") = std::vector<IngredientLine>{},
           py::arg("instructions") = std::vector<std::string>{})
      .def_readwrite("id", &RecipeRecord::id)
      .def_readwrite("title", &RecipeRecord::title)
      .def_readwrite("ingredients", &RecipeRecord::ingredients)
      .def_readwrite("instructions", &RecipeRecord::instructions)
      .def("is_valid", &is_valid)
      .def("violations", &violations)
      .def("canonical", &canonical_record)
      .def("to_record_line", &to_record_line)
      .def("__eq__", [](const RecipeRecord& a, const RecipeRecord& b) { return a == b; })
      .def("__repr__", [](const RecipeRecord& r) { return "<Recipe " + r.id + " '" + r.title + "'>"; });

  py::class_<TaggedDocument>(m, "TaggedDocument")
      .def(py::init(&TaggedDocument::from_text), py::arg("text"), py::arg("recipe_count") = 1)
      .def_readonly("text", &TaggedDocument::text)
      .def_readonly("char_len", &TaggedDocument::char_len)
      .def_readonly("recipe_count", &TaggedDocument::recipe_count)
      .def("__eq__", [](const TaggedDocument& a, const TaggedDocument& b) { return a == b; })
      .def("__repr__", [](const TaggedDocument& d) {
        return "<TaggedDocument " + std::to_string(d.char_len) + " chars, " + std::to_string(d.recipe_count) +
               " recipe(s)>";
      });

  m.def(
      "ingest",
      [](const fs::path& path, const std::string& format) {
        auto result = ingest(path, parse_corpus_format(format));
        std::vector<std::pair<std::size_t, std::string>> rejects;
        for (const auto& r : result.rejects) rejects.emplace_back(r.line, r.reason);
        return std::make_pair(std::move(result.records), std::move(rejects));
      },
      py::arg("path"), py::arg("format") = "record-lines",
      "Reads a raw corpus. Returns (records, [(line, reason), ...]).");
  m.def(
      "export_records",
      [](const std::vector<RecipeRecord>& records, const fs::path& path, const std::string& format) {
        export_records(records, path, parse_corpus_format(format));
      },
      py::arg("records"), py::arg("path"), py::arg("format") = "record-lines");
  m.def("serialize", &serialize, py::arg("record"));
  m.def(
      "parse",
      [](std::string_view text) {
        auto r = parse(text);
        py::dict out;
        out["recipe"] = r.record;
        out["malformed"] = r.malformed;
        std::vector<std::string> recovered;
        for (auto s : r.recovered) recovered.push_back(section_name(s));
        out["recovered"] = recovered;
        return out;
      },
      py::arg("text"), "Best-effort parse of tagged text into {'recipe', 'malformed', 'recovered'}.");
  m.def(
      "split_recipes",
      [](const std::string& text) {
        std::vector<std::string> out;
        for (auto piece : split_recipes(text)) out.emplace_back(piece);
        return out;
      },
      py::arg("text"));
  m.def("strip_tags", &strip_tags, py::arg("text"));
  m.def("read_documents", &read_documents, py::arg("path"));
  m.def(
      "write_documents",
      [](const std::vector<TaggedDocument>& docs, const fs::path& path) { write_documents(docs, path); },
      py::arg("docs"), py::arg("path"));
  m.def(
      "length_stats",
      [](const std::vector<TaggedDocument>& docs, std::size_t bins) {
        const auto s = length_stats(docs, bins);
        py::dict out;
        out["n"] = s.n;
        out["mean"] = s.mean_len;
        out["std"] = s.std_len;
        out["min"] = s.min_len;
        out["max"] = s.max_len;
        out["bin_width"] = s.bin_width;
        out["histogram"] = s.histogram;
        return out;
      },
      py::arg("docs"), py::arg("bins") = 20);

  py::class_<PrepResult>(m, "PrepResult")
      .def_readonly("docs", &PrepResult::docs)
      .def_readonly("records", &PrepResult::records)
      .def_readonly("heldout", &PrepResult::heldout)
      .def_readonly("dropped_ids", &PrepResult::dropped_ids)
      .def_property_readonly("rejected",
                             [](const PrepResult& r) {
                               std::vector<std::pair<std::string, std::string>> out;
                               for (const auto& x : r.rejected) out.emplace_back(x.id, x.reason);
                               return out;
                             })
      .def_property_readonly("report", [](const PrepResult& r) { return r.report.to_text(); });

  m.def(
      "prepare",
      [](std::vector<RecipeRecord> records, std::size_t hard_cap, bool merge, bool split_heldout) {
        PrepOptions opts;
        opts.hard_cap = hard_cap;
        opts.merge = merge;
        opts.split_heldout = split_heldout;
        py::gil_scoped_release release;
        return prepare(IngestResult{std::move(records), {}}, opts);
      },
      py::arg("records"), py::arg("hard_cap") = kDefaultHardCap, py::arg("merge") = true,
      py::arg("split_heldout") = false);

  py::class_<SynthCorpus>(m, "SynthCorpus")
      .def_readonly("records", &SynthCorpus::records)
      .def_readonly("duplicate_ids", &SynthCorpus::duplicate_ids)
      .def_readonly("incomplete_ids", &SynthCorpus::incomplete_ids)
      .def_readonly("overlength_ids", &SynthCorpus::overlength_ids)
      .def_readonly("short_ids", &SynthCorpus::short_ids);
  m.def(
      "synthesize_corpus",
      [](std::size_t total, std::size_t duplicates, std::size_t incomplete, std::size_t overlength,
         std::size_t short_docs, std::uint64_t seed) {
        return synthesize_corpus({total, duplicates, incomplete, overlength, short_docs, seed});
      },
      py::arg("total") = 1000, py::arg("duplicates") = 30, py::arg("incomplete") = 20, py::arg("overlength") = 10,
      py::arg("short_docs") = 15, py::arg("seed") = 1);

  // --- configuration and models ---------------------------------------------
  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("context_len", &TrainConfig::context_len)
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("beta1", &TrainConfig::beta1)
      .def_readwrite("beta2", &TrainConfig::beta2)
      .def_readwrite("eps", &TrainConfig::eps)
      .def_readwrite("max_steps", &TrainConfig::max_steps)
      .def_readwrite("checkpoint_every", &TrainConfig::checkpoint_every)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("grad_clip_norm", &TrainConfig::grad_clip_norm)
      .def_readwrite("eval_every", &TrainConfig::eval_every)
      .def_readwrite("target_loss", &TrainConfig::target_loss);

  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_static("parse", [](std::string_view text) { return parse_run_config(text); }, py::arg("text"))
      .def_static("load", [](const fs::path& path) { return load_run_config(path); }, py::arg("path"))
      .def_readwrite("train", &RunConfig::train)
      .def_readwrite("min_freq", &RunConfig::min_freq);

  py::class_<nn::Model>(m, "Model")
      .def_static("load", &nn::Model::load, py::arg("path"))
      .def_static(
          "create",
          [](const std::string& kind, const std::vector<TaggedDocument>& docs, std::optional<RunConfig> config,
             std::optional<std::uint64_t> seed) { return create_model(kind, docs, config.value_or(RunConfig{}), seed); },
          py::arg("kind"), py::arg("docs"), py::arg("config") = py::none(), py::arg("seed") = py::none(),
          "Fresh model of kind 'char-lstm', 'word-lstm' or 'transformer' with a vocabulary built from docs.")
      .def("save", &nn::Model::save, py::arg("path"))
      .def_property_readonly("kind", &model_kind_name)
      .def_property_readonly("vocab_size", &nn::Model::vocab_size)
      .def_property_readonly("context_len", &nn::Model::context_len)
      .def_property_readonly("steps", [](const nn::Model& mdl) { return mdl.meta.steps; })
      .def_property_readonly("parameter_count", [](const nn::Model& mdl) { return mdl.params().total_elements(); })
      .def("encode", [](const nn::Model& mdl, std::string_view text) { return mdl.vocab().encode(text); })
      .def("decode", [](const nn::Model& mdl, const std::vector<TokenId>& ids) { return mdl.vocab().decode(ids); })
      .def("__repr__", [](const nn::Model& mdl) {
        return "<Model " + model_kind_name(mdl) + " vocab=" + std::to_string(mdl.vocab_size()) +
               " context=" + std::to_string(mdl.context_len()) + ">";
      });

  py::class_<TrainReport>(m, "TrainReport")
      .def_readonly("total_steps", &TrainReport::total_steps)
      .def_readonly("steps_this_run", &TrainReport::steps_this_run)
      .def_readonly("elapsed_seconds", &TrainReport::elapsed_seconds)
      .def_readonly("final_loss", &TrainReport::final_loss)
      .def_readonly("reached_target", &TrainReport::reached_target)
      .def_readonly("checkpoint_path", &TrainReport::checkpoint_path)
      .def_property_readonly("losses", [](const TrainReport& r) {
        std::vector<std::pair<std::size_t, double>> out;
        for (const auto& e : r.log) out.emplace_back(e.step, e.loss);
        return out;
      });

  m.def(
      "train",
      [](nn::Model& model, const std::vector<TaggedDocument>& docs, const TrainConfig& config,
         std::optional<fs::path> out) {
        py::gil_scoped_release release;
        return train(model, docs, config, out.value_or(fs::path{}));
      },
      py::arg("model"), py::arg("docs"), py::arg("config"), py::arg("out") = py::none(),
      "Trains in place and returns the report; writes a checkpoint when out is given.");
  m.def(
      "perplexity",
      [](const nn::Model& model, const std::vector<TaggedDocument>& docs) {
        py::gil_scoped_release release;
        return perplexity(model, docs);
      },
      py::arg("model"), py::arg("docs"));
  m.def(
      "cross_entropy",
      [](const nn::Model& model, const std::vector<TaggedDocument>& docs) {
        py::gil_scoped_release release;
        return stream_cross_entropy(model, docs);
      },
      py::arg("model"), py::arg("docs"));

  // --- generation -------------------------------------------------------------
  py::class_<SamplingParams>(m, "SamplingParams")
      .def(py::init([](double temperature, std::size_t top_k, std::size_t max_new_tokens, std::uint64_t seed) {
             SamplingParams p{temperature, top_k, max_new_tokens, seed};
             p.validate();
             return p;
           }),
           py::arg("temperature") = 0.8, py::arg("top_k") = 40, py::arg("max_new_tokens") = 1024,
           py::arg("seed") = 0)
      .def_readwrite("temperature", &SamplingParams::temperature)
      .def_readwrite("top_k", &SamplingParams::top_k)
      .def_readwrite("max_new_tokens", &SamplingParams::max_new_tokens)
      .def_readwrite("seed", &SamplingParams::seed);

  py::class_<GeneratedRecipe>(m, "GeneratedRecipe")
      .def_readonly("raw_text", &GeneratedRecipe::raw_text)
      .def_readonly("recipe", &GeneratedRecipe::parsed)
      .def_readonly("malformed", &GeneratedRecipe::malformed)
      .def_readonly("tokens_generated", &GeneratedRecipe::tokens_generated)
      .def_property_readonly("finish_reason",
                             [](const GeneratedRecipe& g) { return std::string(to_string(g.finish_reason)); })
      .def("to_json", [](const GeneratedRecipe& g) { return to_json(g); })
      .def("__str__", [](const GeneratedRecipe& g) { return to_text(g); });

  m.def(
      "generate",
      [](const nn::Model& model, const std::vector<std::string>& ingredients, double temperature,
         std::size_t top_k, std::size_t max_new_tokens, std::uint64_t seed) {
        const SamplingParams p{temperature, top_k, max_new_tokens, seed};
        py::gil_scoped_release release;
        return generate(model, ingredients, p);
      },
      py::arg("model"), py::arg("ingredients"), py::arg("temperature") = 0.8, py::arg("top_k") = 40,
      py::arg("max_new_tokens") = 1024, py::arg("seed") = 0);

  // --- scoring ----------------------------------------------------------------
  py::class_<BleuScore>(m, "BleuScore")
      .def_readonly("score", &BleuScore::score)
      .def_readonly("precisions", &BleuScore::precisions)
      .def_readonly("brevity_penalty", &BleuScore::brevity_penalty)
      .def_readonly("candidate_length", &BleuScore::candidate_length)
      .def_readonly("reference_length", &BleuScore::reference_length)
      .def_property_readonly("counts", [](const BleuScore& s) {
        std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
        for (const auto& c : s.counts) out.emplace_back(c.matches, c.total);
        return out;
      });

  m.def(
      "bleu",
      [](std::string candidate, std::vector<std::string> references, std::size_t max_n, const std::string& smoothing) {
        return bleu({std::move(candidate), std::move(references)}, max_n, parse_smoothing(smoothing));
      },
      py::arg("candidate"), py::arg("references"), py::arg("max_n") = 4, py::arg("smoothing") = "add-one");
  m.def(
      "corpus_bleu",
      [](const std::vector<std::pair<std::string, std::vector<std::string>>>& pairs, std::size_t max_n,
         const std::string& smoothing) {
        std::vector<EvalPair> eval_pairs;
        for (const auto& [c, r] : pairs) eval_pairs.push_back({c, r});
        return corpus_bleu(eval_pairs, max_n, parse_smoothing(smoothing));
      },
      py::arg("pairs"), py::arg("max_n") = 4, py::arg("smoothing") = "add-one");

  m.def(
      "evaluate",
      [](const std::vector<std::pair<std::string, const nn::Model*>>& models, const std::vector<RecipeRecord>& heldout,
         const SamplingParams& params, const std::string& smoothing) {
        std::vector<EvalModel> entries;
        for (const auto& [id, model] : models) entries.push_back({id, model});
        py::gil_scoped_release release;
        const auto report = eval_harness(entries, heldout, params, parse_smoothing(smoothing));
        return std::make_pair(report.table(), report.json());
      },
      py::arg("models"), py::arg("heldout"), py::arg("params"), py::arg("smoothing") = "add-one",
      "Corpus BLEU per (id, model) on held-out records. Returns (table text, JSON text).");
}
