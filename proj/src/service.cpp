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

#include "recipegen/service.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

// The stock backlog of 5 drops connections when a burst of clients arrives
// while every worker is busy.
#define CPPHTTPLIB_LISTEN_BACKLOG 128
#include "httplib.h"
#include "json.hpp"
#include "recipegen/errors.hpp"
#include "recipegen/special_tokens.hpp"

namespace recipegen {

namespace {

using Json = nlohmann::ordered_json;

constexpr std::uint64_t kSafeIntegerMask = (std::uint64_t{1} << 53) - 1;  // exact in JSON doubles

std::string dump(const Json& j) { return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace); }

HttpResponse ok(const Json& j) { return {200, dump(j), "application/json"}; }

std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string model_kind_label(const nn::Model& m) {
  if (m.kind() == nn::ModelKind::transformer) return "transformer";
  return m.vocab().mode() == VocabMode::word ? "word-lstm" : "char-lstm";
}

bool is_json_content_type(std::string_view ct) {
  const auto semi = ct.find(';');
  std::string media = to_lower(collapse_whitespace(ct.substr(0, semi)));
  return media == "application/json";
}

struct FieldError {
  std::string field;
  std::string message;
};

}  // namespace

HttpResponse error_response(int status, std::string_view code, std::string_view message, std::string_view field) {
  Json err{{"code", code}, {"message", message}};
  if (!field.empty()) err["field"] = field;
  return {status, dump(Json{{"error", err}}), "application/json"};
}

std::vector<LoadedModel> load_models(std::span<const std::filesystem::path> paths) {
  std::vector<LoadedModel> out;
  std::map<std::string, int> seen;
  for (const auto& p : paths) {
    std::string id = p.stem().string();
    if (const int n = ++seen[id]; n > 1) id += "-" + std::to_string(n);
    out.push_back({id, std::make_shared<const nn::Model>(nn::Model::load(p))});
  }
  return out;
}

IngredientIndex::IngredientIndex(std::span<const std::string> names) {
  std::set<std::string> unique;
  for (const auto& n : names) {
    std::string key = to_lower(collapse_whitespace(n));
    if (!key.empty()) unique.insert(std::move(key));
  }
  names_.assign(unique.begin(), unique.end());
}

IngredientIndex IngredientIndex::from_documents(std::span<const TaggedDocument> docs) {
  std::vector<std::string> names;
  for (const auto& d : docs) {
    for (auto piece : split_recipes(d.text)) {
      try {
        for (const auto& line : parse(piece).record.ingredients) names.push_back(line.name);
      } catch (const UnparseableError&) {
        // a fragment without a start tag carries no ingredients
      }
    }
  }
  return IngredientIndex(names);
}

IngredientIndex IngredientIndex::load(const std::filesystem::path& prep_output) {
  return from_documents(read_documents(prep_output));
}

std::vector<std::string> IngredientIndex::search(std::string_view prefix) const {
  const std::string p = to_lower(prefix);
  auto first = std::lower_bound(names_.begin(), names_.end(), p);
  std::vector<std::string> out;
  for (auto it = first; it != names_.end() && it->starts_with(p); ++it) out.push_back(*it);
  return out;
}

RecipeService::RecipeService(std::vector<LoadedModel> models, std::optional<IngredientIndex> index,
                             SamplingParams defaults, ServiceLimits limits)
    : models_(std::move(models)),
      index_(std::move(index)),
      defaults_(defaults),
      limits_(limits),
      started_(std::chrono::steady_clock::now()),
      seed_base_(std::random_device{}()) {
  std::set<std::string> ids;
  for (const auto& m : models_) {
    if (!m.model) throw ValidationError("model '" + m.id + "' is null");
    if (!ids.insert(m.id).second) throw ValidationError("duplicate model id '" + m.id + "'");
  }
}

HttpResponse RecipeService::generate(std::string_view body, std::string_view content_type) const {
  const auto t0 = std::chrono::steady_clock::now();
  if (models_.empty()) return error_response(503, "no_models", "no model is loaded");
  if (!is_json_content_type(content_type)) {
    return error_response(415, "unsupported_media_type", "requests must use Content-Type: application/json");
  }
  const Json req = Json::parse(body, nullptr, false);
  if (req.is_discarded()) return error_response(400, "malformed_json", "request body is not valid JSON");
  if (!req.is_object()) return error_response(400, "malformed_json", "request body must be a JSON object");

  static const std::set<std::string> kKnown = {"ingredients", "model", "temperature", "top_k", "max_new_tokens",
                                               "seed"};
  for (const auto& [key, value] : req.items()) {
    if (!kKnown.count(key)) return error_response(400, "unknown_field", "unknown field '" + key + "'", key);
  }

  auto invalid = [](const std::string& field, const std::string& message) {
    return error_response(400, "invalid_field", message, field);
  };
  if (!req.contains("ingredients")) return invalid("ingredients", "ingredients is required");
  const Json& list = req["ingredients"];
  if (!list.is_array()) return invalid("ingredients", "ingredients must be an array of strings");
  if (list.empty() || list.size() > limits_.max_ingredients) {
    return invalid("ingredients", "ingredients must hold 1 to " + std::to_string(limits_.max_ingredients) + " items");
  }
  std::vector<std::string> ingredients;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string field = "ingredients[" + std::to_string(i) + "]";
    if (!list[i].is_string()) return invalid(field, "each ingredient must be a string");
    const std::string text = collapse_whitespace(list[i].get<std::string>());
    const std::size_t n = utf8_length(text);
    if (n < 1 || n > limits_.max_ingredient_chars) {
      return invalid(field, "each ingredient must be 1 to " + std::to_string(limits_.max_ingredient_chars) +
                                " characters after trimming");
    }
    if (contains_special(text)) return invalid(field, "ingredients may not contain reserved tokens");
    ingredients.push_back(text);
  }

  const LoadedModel* chosen = &models_.front();
  if (req.contains("model")) {
    if (!req["model"].is_string()) return invalid("model", "model must be a string");
    const auto id = req["model"].get<std::string>();
    auto it = std::find_if(models_.begin(), models_.end(), [&](const LoadedModel& m) { return m.id == id; });
    if (it == models_.end()) return error_response(404, "model_not_found", "no model with id '" + id + "'", "model");
    chosen = &*it;
  }

  SamplingParams params = defaults_;
  if (req.contains("temperature")) {
    const Json& t = req["temperature"];
    if (!t.is_number() || !(t.get<double>() >= 0.0 && t.get<double>() <= 10.0)) {
      return invalid("temperature", "temperature must be a number in [0, 10]");
    }
    params.temperature = t.get<double>();
  }
  if (req.contains("top_k")) {
    const Json& k = req["top_k"];
    if (!k.is_number_unsigned()) return invalid("top_k", "top_k must be a nonnegative integer");
    params.top_k = k.get<std::size_t>();
  }
  if (req.contains("max_new_tokens")) {
    const Json& m = req["max_new_tokens"];
    if (!m.is_number_unsigned() || m.get<std::uint64_t>() < 1 || m.get<std::uint64_t>() > limits_.max_new_tokens) {
      return invalid("max_new_tokens",
                     "max_new_tokens must be an integer in [1, " + std::to_string(limits_.max_new_tokens) + "]");
    }
    params.max_new_tokens = m.get<std::size_t>();
  }
  if (req.contains("seed")) {
    const Json& s = req["seed"];
    if (!s.is_number_unsigned()) return invalid("seed", "seed must be a nonnegative integer");
    params.seed = s.get<std::uint64_t>();
  } else {
    params.seed = splitmix(seed_base_ + seed_counter_.fetch_add(1)) & kSafeIntegerMask;
  }

  GeneratedRecipe g;
  try {
    g = recipegen::generate(*chosen->model, ingredients, params, chosen->id);
  } catch (const ValidationError& e) {
    return invalid("ingredients", e.what());
  }
  Json out;
  out["title"] = g.parsed.title;
  auto lines = Json::array();
  for (const auto& line : g.parsed.ingredients) lines.push_back(render_ingredient(line));
  out["ingredients"] = lines;
  out["instructions"] = g.parsed.instructions;
  out["raw_text"] = g.raw_text;
  out["malformed"] = g.malformed;
  out["finish_reason"] = to_string(g.finish_reason);
  out["tokens_generated"] = g.tokens_generated;
  out["model"] = chosen->id;
  out["elapsed_ms"] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  out["seed_used"] = params.seed;
  return ok(out);
}

HttpResponse RecipeService::models() const {
  auto list = Json::array();
  for (const auto& m : models_) {
    list.push_back({{"id", m.id},
                    {"kind", model_kind_label(*m.model)},
                    {"vocab_size", m.model->vocab_size()},
                    {"context_len", m.model->context_len()}});
  }
  return ok(list);
}

HttpResponse RecipeService::ingredients(std::string_view prefix) const {
  if (!index_) return error_response(503, "index_unavailable", "no ingredient index is loaded");
  return ok(Json(index_->search(prefix)));
}

HttpResponse RecipeService::health() const {
  const double uptime = std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
  return ok(Json{{"status", models_.empty() ? "degraded" : "ok"},
                 {"models_loaded", models_.size()},
                 {"uptime_s", uptime}});
}

// ---------------------------------------------------------------------------
// HTTP front end

struct HttpServer::Impl {
  Impl(const RecipeService& s, std::string origin) : service(s), allow_origin(std::move(origin)) {}

  const RecipeService& service;
  std::string allow_origin;
  httplib::Server server;

  void cors(httplib::Response& res) const {
    if (allow_origin.empty()) return;
    res.set_header("Access-Control-Allow-Origin", allow_origin);
    res.set_header("Vary", "Origin");
  }

  void reply(httplib::Response& res, const HttpResponse& r) const {
    res.status = r.status;
    res.set_content(r.body, r.content_type);
    cors(res);
  }
};

HttpServer::HttpServer(const RecipeService& service, std::string allow_origin)
    : impl_(std::make_unique<Impl>(service, std::move(allow_origin))) {
  auto& srv = impl_->server;
  Impl* self = impl_.get();
  srv.set_payload_max_length(1 << 20);
  srv.Post("/generate", [self](const httplib::Request& req, httplib::Response& res) {
    self->reply(res, self->service.generate(req.body, req.get_header_value("Content-Type")));
  });
  srv.Get("/models", [self](const httplib::Request&, httplib::Response& res) {
    self->reply(res, self->service.models());
  });
  srv.Get("/ingredients", [self](const httplib::Request& req, httplib::Response& res) {
    self->reply(res, self->service.ingredients(req.get_param_value("q")));
  });
  srv.Get("/health", [self](const httplib::Request&, httplib::Response& res) {
    self->reply(res, self->service.health());
  });
  srv.Options(R"(/.*)", [self](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
    self->cors(res);
    if (!self->allow_origin.empty()) {
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.set_header("Access-Control-Max-Age", "600");
    }
  });
  srv.set_exception_handler([self](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    self->reply(res, error_response(500, "internal", what));
  });
  srv.set_error_handler([self](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
    const auto r = res.status == 404   ? error_response(404, "not_found", "no such endpoint")
                   : res.status == 405 ? error_response(405, "method_not_allowed", "method not allowed")
                   : res.status == 413 ? error_response(413, "payload_too_large", "request body too large")
                                       : error_response(res.status, "http_error", "request failed");
    self->reply(res, r);
    return httplib::Server::HandlerResponse::Handled;
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  auto& srv = impl_->server;
  if (port == 0) {
    const int bound = srv.bind_to_any_port(host);
    if (bound < 0) throw IoError("could not bind " + host);
    return bound;
  }
  if (!srv.bind_to_port(host, port)) throw IoError("could not bind " + host + ":" + std::to_string(port));
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace recipegen
