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
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "recipegen/autograd.hpp"
#include "recipegen/tensor.hpp"
#include "recipegen/vocabulary.hpp"

namespace recipegen::nn {

struct ParamSpec {
  std::string name;
  Shape shape;
};

/// Named tensors kept in manifest order.
class ParameterSet {
 public:
  ParameterSet() = default;
  explicit ParameterSet(std::span<const ParamSpec> manifest);

  Tensor& get(std::string_view name);
  const Tensor& get(std::string_view name) const;
  bool contains(std::string_view name) const;

  std::size_t size() const { return tensors_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  Tensor& at(std::size_t i) { return tensors_[i]; }
  const Tensor& at(std::size_t i) const { return tensors_[i]; }
  std::size_t total_elements() const;

  void zero_grad();
  bool same_values(const ParameterSet& other) const;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> tensors_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

/// Resolves a parameter name to a tape handle. Training binds parameters as
/// gradient-receiving variables, inference binds them as read-only constants.
using ParamFn = std::function<Var(std::string_view)>;

ParamFn trainable(Tape& tape, ParameterSet& params);
ParamFn frozen(Tape& tape, const ParameterSet& params);

/// Fills projection and embedding weights with Normal(0, 0.02) drawn in
/// manifest order; gains start at 1 and biases at 0 unless the architecture
/// overrides them.
void init_normal(ParameterSet& params, std::mt19937_64& rng, double stddev = 0.02);

}  // namespace recipegen::nn
