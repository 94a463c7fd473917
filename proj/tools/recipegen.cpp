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

// Command-line front end: corpus preparation, training, generation,
// evaluation and the HTTP service.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "recipegen/corpus.hpp"
#include "recipegen/errors.hpp"
#include "recipegen/eval.hpp"
#include "recipegen/generator.hpp"
#include "recipegen/service.hpp"
#include "recipegen/special_tokens.hpp"
#include "recipegen/synthetic.hpp"
#include "recipegen/trainer.hpp"

namespace fs = std::filesystem;
using namespace recipegen;

namespace {

HttpServer* g_server = nullptr;

extern "C" void handle_signal(int) {
  if (g_server) g_server->stop();
}

std::vector<std::string> split_ingredients(const std::string& list) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    const std::size_t comma = std::min(list.find(',', start), list.size());
    std::string item = collapse_whitespace(std::string_view(list).substr(start, comma - start));
    if (!item.empty()) out.push_back(std::move(item));
    start = comma + 1;
  }
  return out;
}

void print_stats(const char* label, const CorpusStats& s) {
  std::printf("%s: n=%zu mean=%.3f std=%.3f min=%zu max=%zu\n", label, s.n, s.mean_len, s.std_len, s.min_len,
              s.max_len);
  for (std::size_t i = 0; i < s.histogram.size(); ++i) {
    const std::size_t lo = s.min_len + i * s.bin_width;
    std::printf("  [%6zu, %6zu) %zu\n", lo, lo + s.bin_width, s.histogram[i]);
  }
}

nn::ModelConfig model_config(const std::string& model, const RunConfig& run, VocabMode& mode) {
  if (model == "char-lstm" || model == "word-lstm") {
    mode = model == "char-lstm" ? VocabMode::character : VocabMode::word;
    return run.lstm;
  }
  if (model == "transformer") {
    mode = run.transformer_vocab;
    return run.transformer;
  }
  throw ValidationError("unknown model '" + model + "' (expected char-lstm, word-lstm or transformer)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"recipegen: ingredient-conditioned recipe generation"};
  app.require_subcommand(1);

  // corpus ------------------------------------------------------------------
  auto* corpus = app.add_subcommand("corpus", "Inspect, prepare or synthesize recipe corpora");
  corpus->require_subcommand(1);
  std::string format_name = "record-lines";
  corpus->add_option("--format", format_name, "Input format: record-lines or delimited-table");

  std::string stats_in;
  bool stats_prepped = false;
  std::size_t bins = 20;
  auto* stats = corpus->add_subcommand("stats", "Length statistics of serialized records");
  stats->add_option("in", stats_in, "Corpus file")->required();
  stats->add_flag("--prepped", stats_prepped, "Input is a prep output rather than raw records");
  stats->add_option("--bins", bins, "Histogram bins");

  std::string prep_in, prep_out, prep_heldout, prep_report;
  PrepOptions prep_opts;
  bool no_merge = false;
  auto* prep = corpus->add_subcommand("prep", "Clean, window and merge a corpus into tagged documents");
  prep->add_option("in", prep_in, "Raw corpus")->required();
  prep->add_option("out", prep_out, "Tagged document output")->required();
  prep->add_option("--cap", prep_opts.hard_cap, "Hard document length cap in characters");
  prep->add_flag("--no-merge", no_merge, "Keep short documents unmerged");
  prep->add_option("--heldout", prep_heldout, "Write the deterministic held-out split here as record lines");
  prep->add_option("--report", prep_report, "Also write the prep report to this file");

  std::string synth_out;
  SynthOptions synth_opts;
  auto* synth = corpus->add_subcommand("synth", "Write a synthetic corpus with planted defects");
  synth->add_option("out", synth_out, "Record-lines output")->required();
  synth->add_option("--total", synth_opts.total, "Number of records");
  synth->add_option("--duplicates", synth_opts.duplicates);
  synth->add_option("--incomplete", synth_opts.incomplete);
  synth->add_option("--overlength", synth_opts.overlength);
  synth->add_option("--short", synth_opts.short_docs);
  synth->add_option("--seed", synth_opts.seed);

  // train -------------------------------------------------------------------
  std::string train_model, train_corpus, train_cfg, train_out, train_init, train_log;
  std::optional<std::size_t> steps_override;
  auto* train_cmd = app.add_subcommand("train", "Train or resume a model on a prepared corpus");
  train_cmd->add_option("--model", train_model, "char-lstm, word-lstm or transformer")
      ->check(CLI::IsMember({"char-lstm", "word-lstm", "transformer"}));
  train_cmd->add_option("--corpus", train_corpus, "Prep output")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--config", train_cfg, "key=value run configuration")->check(CLI::ExistingFile);
  train_cmd->add_option("--out", train_out, "Checkpoint path")->required();
  train_cmd->add_option("--init", train_init, "Resume from this checkpoint")->check(CLI::ExistingFile);
  train_cmd->add_option("--loss-log", train_log, "Write step<TAB>loss lines here");
  train_cmd->add_option("--steps", steps_override, "Override max_steps");

  // generate ----------------------------------------------------------------
  std::string gen_ckpt, gen_ingredients;
  SamplingParams gen_params;
  bool gen_json = false;
  auto* gen = app.add_subcommand("generate", "Generate a recipe from an ingredient list");
  gen->add_option("--ckpt", gen_ckpt)->required()->check(CLI::ExistingFile);
  gen->add_option("--ingredients", gen_ingredients, "Comma-separated ingredients")->required();
  gen->add_option("--temperature", gen_params.temperature);
  gen->add_option("--top-k", gen_params.top_k);
  gen->add_option("--max-new-tokens", gen_params.max_new_tokens);
  gen->add_option("--seed", gen_params.seed);
  gen->add_flag("--json", gen_json, "Emit the generated recipe as JSON");

  // eval --------------------------------------------------------------------
  std::vector<std::string> eval_ckpts;
  std::string eval_heldout, eval_out, smoothing_name = "add-one";
  SamplingParams eval_params;
  eval_params.temperature = 0.0;
  auto* ev = app.add_subcommand("eval", "Corpus BLEU of each checkpoint on held-out recipes");
  ev->add_option("--ckpt", eval_ckpts)->required()->check(CLI::ExistingFile);
  ev->add_option("--heldout", eval_heldout, "Held-out records (record lines)")->required()->check(CLI::ExistingFile);
  ev->add_option("--smoothing", smoothing_name)->check(CLI::IsMember({"add-one", "none"}));
  ev->add_option("--seed", eval_params.seed);
  ev->add_option("--temperature", eval_params.temperature, "0 decodes greedily");
  ev->add_option("--top-k", eval_params.top_k);
  ev->add_option("--max-new-tokens", eval_params.max_new_tokens);
  ev->add_option("--out", eval_out, "Also write the report here");

  // serve -------------------------------------------------------------------
  std::vector<std::string> serve_ckpts;
  std::string serve_index, allow_origin, host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Run the HTTP generation service");
  serve->add_option("--ckpt", serve_ckpts)->check(CLI::ExistingFile);
  serve->add_option("--corpus-index", serve_index, "Prep output to build the ingredient index from")
      ->check(CLI::ExistingFile);
  serve->add_option("--port", port);
  serve->add_option("--host", host);
  serve->add_option("--allow-origin", allow_origin, "CORS origin allowed to call the API");

  CLI11_PARSE(app, argc, argv);

  try {
    if (stats->parsed()) {
      std::vector<TaggedDocument> docs;
      if (stats_prepped) {
        docs = read_documents(stats_in);
      } else {
        const auto ingested = ingest(stats_in, parse_corpus_format(format_name));
        for (const auto& r : ingested.records) {
          if (is_valid(r)) docs.push_back(serialize(r));
        }
        std::printf("records: %zu (rejected rows %zu)\n", ingested.records.size(), ingested.rejects.size());
      }
      if (docs.empty()) throw EmptyCorpusError("no documents in " + stats_in);
      print_stats("lengths", length_stats(docs, bins));
    } else if (prep->parsed()) {
      prep_opts.merge = !no_merge;
      prep_opts.split_heldout = !prep_heldout.empty();
      const auto result = prepare(ingest(prep_in, parse_corpus_format(format_name)), prep_opts);
      write_documents(result.docs, prep_out);
      if (!prep_heldout.empty()) export_records(result.heldout, prep_heldout, CorpusFormat::record_lines);
      const std::string report = result.report.to_text();
      std::fputs(report.c_str(), stdout);
      if (!prep_report.empty()) write_file_atomic(prep_report, report);
    } else if (synth->parsed()) {
      const auto corpus_out = synthesize_corpus(synth_opts);
      export_records(corpus_out.records, synth_out, CorpusFormat::record_lines);
      std::printf("records: %zu duplicates: %zu incomplete: %zu overlength: %zu short: %zu\n",
                  corpus_out.records.size(), corpus_out.duplicate_ids.size(), corpus_out.incomplete_ids.size(),
                  corpus_out.overlength_ids.size(), corpus_out.short_ids.size());
    } else if (train_cmd->parsed()) {
      const RunConfig run = train_cfg.empty() ? RunConfig{} : load_run_config(train_cfg);
      TrainConfig tc = run.train;
      if (steps_override) tc.max_steps = *steps_override;
      const auto docs = read_documents(train_corpus);
      nn::Model model = [&] {
        if (!train_init.empty()) return nn::Model::load(train_init);
        if (train_model.empty()) throw ValidationError("--model is required unless --init is given");
        VocabMode mode{};
        const auto config = model_config(train_model, run, mode);
        return init_model(config, mode, run.min_freq, docs, tc.seed);
      }();
      const auto report = train(model, docs, tc, train_out, [](const LogEntry& e) {
        if (e.step % 50 == 0) std::fprintf(stderr, "step %zu loss %.6f (%.0f tok/s)\n", e.step, e.loss, e.tokens_per_sec);
      });
      if (!train_log.empty()) write_file_atomic(train_log, report.loss_log());
      std::printf("steps: %zu (this run %zu)\nfinal_loss: %.6f\nelapsed_s: %.2f\ncheckpoint: %s\n",
                  report.total_steps, report.steps_this_run, report.final_loss, report.elapsed_seconds,
                  report.checkpoint_path.string().c_str());
      if (tc.target_loss > 0) std::printf("reached_target: %s\n", report.reached_target ? "yes" : "no");
    } else if (gen->parsed()) {
      const auto model = nn::Model::load(gen_ckpt);
      const auto ingredients = split_ingredients(gen_ingredients);
      const auto recipe = generate(model, ingredients, gen_params, fs::path(gen_ckpt).stem().string());
      std::cout << (gen_json ? to_json(recipe, 2) + "\n" : to_text(recipe));
    } else if (ev->parsed()) {
      std::vector<EvalModel> entries;
      const auto loaded = load_models(std::vector<fs::path>(eval_ckpts.begin(), eval_ckpts.end()));
      for (const auto& m : loaded) entries.push_back({m.id, m.model.get()});
      const auto heldout = ingest(eval_heldout, CorpusFormat::record_lines).records;
      const auto report = eval_harness(entries, heldout, eval_params, parse_smoothing(smoothing_name));
      const std::string text = report.render();
      std::fputs(text.c_str(), stdout);
      if (!eval_out.empty()) write_file_atomic(eval_out, text);
    } else if (serve->parsed()) {
      auto models = load_models(std::vector<fs::path>(serve_ckpts.begin(), serve_ckpts.end()));
      std::optional<IngredientIndex> index;
      if (!serve_index.empty()) index = IngredientIndex::load(serve_index);
      RecipeService service(std::move(models), std::move(index));
      HttpServer server(service, allow_origin);
      const int bound = server.bind(host, port);
      g_server = &server;
      std::signal(SIGINT, handle_signal);
      std::signal(SIGTERM, handle_signal);
      std::fprintf(stderr, "serving %zu model(s) on http://%s:%d\n", service.model_count(), host.c_str(), bound);
      server.listen();
      g_server = nullptr;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
