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

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "recipegen/checkpoint.hpp"
#include "recipegen/corpus.hpp"
#include "recipegen/generator.hpp"

namespace recipegen {

struct HttpResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

struct LoadedModel {
  std::string id;
  std::shared_ptr<const nn::Model> model;
};

/// Loads checkpoints with ids taken from the file stems, suffixed "-2",
/// "-3", ... when stems collide.
std::vector<LoadedModel> load_models(std::span<const std::filesystem::path> paths);

/// Lowercased, whitespace-collapsed, deduplicated and sorted ingredient names.
class IngredientIndex {
 public:
  IngredientIndex() = default;
  explicit IngredientIndex(std::span<const std::string> names);

  /// Names from every recipe embedded in prep-output documents.
  static IngredientIndex from_documents(std::span<const TaggedDocument> docs);
  static IngredientIndex load(const std::filesystem::path& prep_output);

  /// Names starting with the lowercased `prefix`; all names when empty.
  std::vector<std::string> search(std::string_view prefix) const;
  std::size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
};

struct ServiceLimits {
  std::size_t max_ingredients = 50;
  std::size_t max_ingredient_chars = 100;
  std::size_t max_new_tokens = 4096;
};

/// Transport-independent request handlers. Loaded models and the index are
/// immutable after construction, so every handler may run concurrently.
class RecipeService {
 public:
  RecipeService(std::vector<LoadedModel> models, std::optional<IngredientIndex> index,
                SamplingParams defaults = {}, ServiceLimits limits = {});

  /// 200 GenerateResponse; 400 malformed body or invalid field; 404 unknown
  /// model; 415 non-JSON content type; 503 when no model is loaded.
  HttpResponse generate(std::string_view body, std::string_view content_type) const;
  HttpResponse models() const;
  /// 503 when no index was loaded.
  HttpResponse ingredients(std::string_view prefix) const;
  HttpResponse health() const;

  std::size_t model_count() const { return models_.size(); }

 private:
  std::vector<LoadedModel> models_;
  std::optional<IngredientIndex> index_;
  SamplingParams defaults_;
  ServiceLimits limits_;
  std::chrono::steady_clock::time_point started_;
  mutable std::atomic<std::uint64_t> seed_counter_{0};
  std::uint64_t seed_base_;
};

/// Error body {"error": {"code", "message", "field"?}}.
HttpResponse error_response(int status, std::string_view code, std::string_view message,
                            std::string_view field = {});

/// HTTP front end over a RecipeService.
class HttpServer {
 public:
  /// `allow_origin` (when nonempty) is echoed in CORS headers and answers
  /// preflight requests.
  HttpServer(const RecipeService& service, std::string allow_origin = {});
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds `host:port` (port 0 picks a free port) and returns the bound port.
  /// Throws IoError when binding fails.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  void listen();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace recipegen
