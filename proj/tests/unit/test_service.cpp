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

#include <chrono>
#include <filesystem>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "recipegen/corpus.hpp"
#include "recipegen/errors.hpp"
#include "recipegen/service.hpp"
#include "recipegen/trainer.hpp"
#include "schema_check.hpp"

using namespace recipegen;
namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

const fs::path kData = RECIPEGEN_TEST_DATA;

const recipegen::testing::SchemaChecker& schema() {
  static const recipegen::testing::SchemaChecker checker(Json::parse(read_file(RECIPEGEN_SCHEMA)));
  return checker;
}

std::vector<TaggedDocument> toy_docs() {
  std::vector<TaggedDocument> docs;
  for (const auto& r : ingest(kData / "toy_recipes.jsonl", CorpusFormat::record_lines).records) {
    docs.push_back(serialize(r));
  }
  return docs;
}

/// A small untrained checkpoint on disk, shared by every test in this file.
const fs::path& toy_checkpoint() {
  static const fs::path path = [] {
    nn::LSTMConfig c;
    c.embed_dim = 8;
    c.hidden_dim = 16;
    const auto m = init_model(c, VocabMode::character, 1, toy_docs(), 5);
    const auto p = fs::temp_directory_path() / "recipegen_service_toy.ckpt";
    m.save(p);
    return p;
  }();
  return path;
}

RecipeService make_service(std::size_t n_models = 1, bool with_index = true) {
  std::vector<fs::path> paths(n_models, toy_checkpoint());
  std::optional<IngredientIndex> index;
  if (with_index) index = IngredientIndex::from_documents(toy_docs());
  SamplingParams defaults;
  defaults.max_new_tokens = 64;
  return RecipeService(load_models(paths), std::move(index), defaults);
}

Json body(const HttpResponse& r) { return Json::parse(r.body); }

void check_error(const HttpResponse& r, int status, const std::string& code, const std::string& field = {}) {
  CHECK(r.status == status);
  CHECK(r.content_type == "application/json");
  const auto j = body(r);
  CHECK(schema().check(j, "ErrorBody").empty());
  CHECK(j["error"]["code"] == code);
  CHECK_FALSE(j["error"]["message"].get<std::string>().empty());
  if (!field.empty()) CHECK(j["error"]["field"] == field);
}

constexpr const char* kJson = "application/json";

}  // namespace

TEST_SUITE("handlers") {
  TEST_CASE("happy path returns a schema-valid response") {
    const auto svc = make_service();
    const auto r = svc.generate(R"({"ingredients":["salt","flour"]})", kJson);
    REQUIRE(r.status == 200);
    const auto j = body(r);
    const auto errors = schema().check(j, "GenerateResponse");
    CHECK_MESSAGE(errors.empty(), (errors.empty() ? "" : errors.front()));
    CHECK_FALSE(j["raw_text"].get<std::string>().empty());
    CHECK(j["model"] == "recipegen_service_toy");
    CHECK(j["elapsed_ms"].get<double>() >= 0.0);
    CHECK(j["tokens_generated"].get<int>() <= 64);
  }

  TEST_CASE("explicit seed replays exactly; absent seed is chosen and reported") {
    const auto svc = make_service();
    const std::string req = R"({"ingredients":["rice"],"seed":1234,"temperature":1.0,"top_k":0})";
    const auto a = body(svc.generate(req, kJson));
    const auto b = body(svc.generate(req, kJson));
    CHECK(a["raw_text"] == b["raw_text"]);
    CHECK(a["seed_used"] == 1234);
    std::set<std::uint64_t> seeds;
    for (int i = 0; i < 5; ++i) {
      const auto j = body(svc.generate(R"({"ingredients":["rice"]})", kJson));
      const auto s = j["seed_used"].get<std::uint64_t>();
      CHECK(s < (std::uint64_t{1} << 53));
      seeds.insert(s);
    }
    CHECK(seeds.size() == 5);
  }

  TEST_CASE("ingredient list validation") {
    const auto svc = make_service();
    check_error(svc.generate(R"({"ingredients":[]})", kJson), 400, "invalid_field", "ingredients");
    check_error(svc.generate(R"({})", kJson), 400, "invalid_field", "ingredients");
    check_error(svc.generate(R"({"ingredients":"salt"})", kJson), 400, "invalid_field", "ingredients");
    Json many = {{"ingredients", std::vector<std::string>(51, "salt")}};
    check_error(svc.generate(many.dump(), kJson), 400, "invalid_field", "ingredients");
    Json fifty = {{"ingredients", std::vector<std::string>(50, "salt")}, {"max_new_tokens", 1}};
    CHECK(svc.generate(fifty.dump(), kJson).status == 200);
    Json long_item = {{"ingredients", {"salt", std::string(101, 'a')}}};
    check_error(svc.generate(long_item.dump(), kJson), 400, "invalid_field", "ingredients[1]");
    Json max_item = {{"ingredients", {std::string(100, 'a')}}, {"max_new_tokens", 1}};
    CHECK(svc.generate(max_item.dump(), kJson).status == 200);
    check_error(svc.generate(R"({"ingredients":["salt","   "]})", kJson), 400, "invalid_field", "ingredients[1]");
    check_error(svc.generate(R"({"ingredients":["salt",3]})", kJson), 400, "invalid_field", "ingredients[1]");
    check_error(svc.generate(R"({"ingredients":["<RECIPE_END>"]})", kJson), 400, "invalid_field",
                "ingredients[0]");
  }

  TEST_CASE("sampling field validation") {
    const auto svc = make_service();
    check_error(svc.generate(R"({"ingredients":["a"],"temperature":-0.1})", kJson), 400, "invalid_field", "temperature");
    check_error(svc.generate(R"({"ingredients":["a"],"temperature":"hot"})", kJson), 400, "invalid_field", "temperature");
    check_error(svc.generate(R"({"ingredients":["a"],"top_k":-1})", kJson), 400, "invalid_field", "top_k");
    check_error(svc.generate(R"({"ingredients":["a"],"top_k":1.5})", kJson), 400, "invalid_field", "top_k");
    check_error(svc.generate(R"({"ingredients":["a"],"max_new_tokens":0})", kJson), 400, "invalid_field",
                "max_new_tokens");
    check_error(svc.generate(R"({"ingredients":["a"],"max_new_tokens":5000})", kJson), 400, "invalid_field",
                "max_new_tokens");
    check_error(svc.generate(R"({"ingredients":["a"],"seed":-3})", kJson), 400, "invalid_field", "seed");
    check_error(svc.generate(R"({"ingredients":["a"],"model":7})", kJson), 400, "invalid_field", "model");
  }

  TEST_CASE("body and media type errors") {
    const auto svc = make_service();
    check_error(svc.generate("{not json", kJson), 400, "malformed_json");
    check_error(svc.generate("[1,2]", kJson), 400, "malformed_json");
    check_error(svc.generate(R"({"ingredients":["a"],"colour":"red"})", kJson), 400, "unknown_field", "colour");
    check_error(svc.generate(R"({"ingredients":["a"]})", "text/plain"), 415, "unsupported_media_type");
    CHECK(svc.generate(R"({"ingredients":["a"],"max_new_tokens":1})", "application/json; charset=utf-8").status ==
          200);
  }

  TEST_CASE("unknown model is 404, no models is 503") {
    const auto svc = make_service();
    check_error(svc.generate(R"({"ingredients":["a"],"model":"nope"})", kJson), 404, "model_not_found", "model");
    const auto r = svc.generate(R"({"ingredients":["a"],"model":"recipegen_service_toy","max_new_tokens":2})", kJson);
    CHECK(r.status == 200);

    const auto empty = make_service(0);
    check_error(empty.generate(R"({"ingredients":["a"]})", kJson), 503, "no_models");
    // 503 wins over body validation when nothing can serve the request.
    check_error(empty.generate("{bad", kJson), 503, "no_models");
    CHECK(body(empty.models()) == Json::array());
    CHECK(body(empty.health())["status"] == "degraded");
    CHECK(body(empty.health())["models_loaded"] == 0);
  }

  TEST_CASE("models listing") {
    const auto svc = make_service(2);
    const auto r = svc.models();
    CHECK(r.status == 200);
    const auto j = body(r);
    CHECK(schema().check(j, "ModelList").empty());
    REQUIRE(j.size() == 2);
    CHECK(j[0]["id"] == "recipegen_service_toy");
    CHECK(j[1]["id"] == "recipegen_service_toy-2");
    CHECK(j[0]["kind"] == "char-lstm");
    CHECK(j[0]["vocab_size"].get<int>() > 22);
    CHECK(body(svc.models()) == j);  // stable ordering
  }

  TEST_CASE("ingredient index") {
    const std::vector<std::string> names = {"Salt", "salt", "flour", "  brown   sugar "};
    RecipeService svc(load_models(std::vector<fs::path>{toy_checkpoint()}), IngredientIndex(names));
    const auto all = body(svc.ingredients(""));
    CHECK(schema().check(all, "IngredientList").empty());
    CHECK(all == Json({"brown sugar", "flour", "salt"}));
    CHECK(body(svc.ingredients("fl")) == Json({"flour"}));
    CHECK(body(svc.ingredients("FL")) == Json({"flour"}));
    CHECK(body(svc.ingredients("zzz")) == Json::array());

    const auto from_corpus = make_service();
    const auto list = body(from_corpus.ingredients(""));
    CHECK(std::find(list.begin(), list.end(), "garlic") != list.end());
    CHECK(std::is_sorted(list.begin(), list.end()));

    const auto no_index = make_service(1, false);
    check_error(no_index.ingredients(""), 503, "index_unavailable");
  }

  TEST_CASE("health reports models and a monotone uptime") {
    const auto svc = make_service();
    const auto a = body(svc.health());
    CHECK(schema().check(a, "Health").empty());
    CHECK(a["status"] == "ok");
    CHECK(a["models_loaded"] == 1);
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    const auto b = body(svc.health());
    CHECK(b["uptime_s"].get<double>() > a["uptime_s"].get<double>());
  }

  TEST_CASE("duplicate ids and null models are rejected at construction") {
    auto models = load_models(std::vector<fs::path>{toy_checkpoint()});
    models.push_back(models.front());
    CHECK_THROWS_AS(RecipeService(models, std::nullopt), ValidationError);
    std::vector<LoadedModel> null_model = {{"x", nullptr}};
    CHECK_THROWS_AS(RecipeService(null_model, std::nullopt), ValidationError);
  }
}

TEST_SUITE("http") {
  struct Running {
    explicit Running(const RecipeService& svc, std::string origin = {}) : server(svc, std::move(origin)) {
      port = server.bind("127.0.0.1", 0);
      thread = std::thread([this] { server.listen(); });
      server.wait_until_ready();
    }
    ~Running() {
      server.stop();
      thread.join();
    }
    HttpServer server;
    int port = 0;
    std::thread thread;
  };

  TEST_CASE("end-to-end happy path under five seconds") {
    const auto svc = make_service();
    Running srv(svc);
    httplib::Client cli("127.0.0.1", srv.port);
    const auto t0 = std::chrono::steady_clock::now();
    auto res = cli.Post("/generate", R"({"ingredients":["salt","flour"],"seed":3})", kJson);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(secs < 5.0);
    CHECK(res->get_header_value("Content-Type").find("application/json") == 0);
    CHECK(schema().check(Json::parse(res->body), "GenerateResponse").empty());

    res = cli.Get("/models");
    REQUIRE(res);
    CHECK(Json::parse(res->body).size() == 1);
    res = cli.Get("/ingredients?q=gar");
    REQUIRE(res);
    CHECK(Json::parse(res->body) == Json({"garlic"}));
    res = cli.Get("/health");
    REQUIRE(res);
    CHECK(Json::parse(res->body)["status"] == "ok");
  }

  TEST_CASE("errors over the wire carry JSON bodies") {
    const auto svc = make_service();
    Running srv(svc);
    httplib::Client cli("127.0.0.1", srv.port);
    auto res = cli.Post("/generate", R"({"ingredients":[]})", kJson);
    REQUIRE(res);
    CHECK(res->status == 400);
    CHECK(Json::parse(res->body)["error"]["field"] == "ingredients");
    res = cli.Post("/generate", R"({"ingredients":["a"]})", "text/plain");
    REQUIRE(res);
    CHECK(res->status == 415);
    res = cli.Get("/nowhere");
    REQUIRE(res);
    CHECK(res->status == 404);
    CHECK(schema().check(Json::parse(res->body), "ErrorBody").empty());
  }

  TEST_CASE("cross-origin headers when an origin is configured") {
    const auto svc = make_service();
    Running srv(svc, "http://localhost:5173");
    httplib::Client cli("127.0.0.1", srv.port);
    auto res = cli.Get("/health");
    REQUIRE(res);
    CHECK(res->get_header_value("Access-Control-Allow-Origin") == "http://localhost:5173");
    res = cli.Options("/generate");
    REQUIRE(res);
    CHECK(res->status == 204);
    CHECK(res->get_header_value("Access-Control-Allow-Methods").find("POST") != std::string::npos);

    Running closed(svc);
    httplib::Client cli2("127.0.0.1", closed.port);
    res = cli2.Get("/health");
    REQUIRE(res);
    CHECK_FALSE(res->has_header("Access-Control-Allow-Origin"));
  }

  TEST_CASE("16 concurrent seeded requests equal their serial replays; checkpoint untouched") {
    const auto before = fnv1a64(read_file(toy_checkpoint()));
    const auto svc = make_service();
    auto request = [](int i) {
      return Json{{"ingredients", {"bread", "garlic"}},
                  {"seed", 1000 + i},
                  {"temperature", 1.0},
                  {"max_new_tokens", 48}}
          .dump();
    };
    std::vector<std::string> serial(16), parallel(16);
    for (int i = 0; i < 16; ++i) serial[i] = body(svc.generate(request(i), kJson))["raw_text"];

    Running srv(svc);
    std::vector<int> status(16, 0);
    std::vector<std::thread> threads;
    for (int i = 0; i < 16; ++i) {
      threads.emplace_back([&, i] {
        httplib::Client cli("127.0.0.1", srv.port);
        cli.set_read_timeout(60, 0);
        auto res = cli.Post("/generate", request(i), kJson);
        if (!res) {
          status[i] = -static_cast<int>(res.error());
          return;
        }
        status[i] = res->status;
        parallel[i] = Json::parse(res->body)["raw_text"];
      });
    }
    for (auto& t : threads) t.join();
    for (int i = 0; i < 16; ++i) CHECK(status[i] == 200);
    CHECK(parallel == serial);
    CHECK(std::set<std::string>(serial.begin(), serial.end()).size() > 1);
    CHECK(fnv1a64(read_file(toy_checkpoint())) == before);
  }
}
