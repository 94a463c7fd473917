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

#include "recipegen/model.hpp"

#include <algorithm>
#include <string>

#include "recipegen/errors.hpp"
#include "recipegen/rng.hpp"

namespace recipegen::nn {

ParameterSet::ParameterSet(std::span<const ParamSpec> manifest) {
  for (const auto& spec : manifest) {
    if (!index_.emplace(spec.name, names_.size()).second) {
      throw Error("duplicate parameter name '" + spec.name + "'");
    }
    names_.push_back(spec.name);
    tensors_.emplace_back(spec.shape);
  }
}

Tensor& ParameterSet::get(std::string_view name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw CompatibilityError("missing parameter '" + std::string(name) + "'");
  return tensors_[it->second];
}

const Tensor& ParameterSet::get(std::string_view name) const {
  return const_cast<ParameterSet*>(this)->get(name);
}

bool ParameterSet::contains(std::string_view name) const { return index_.find(name) != index_.end(); }

std::size_t ParameterSet::total_elements() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& t : tensors_) t.zero_grad();
}

bool ParameterSet::same_values(const ParameterSet& other) const {
  if (names_ != other.names_) return false;
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    if (!tensors_[i].same_values(other.tensors_[i])) return false;
  }
  return true;
}

ParamFn trainable(Tape& tape, ParameterSet& params) {
  return [&tape, &params](std::string_view name) { return tape.variable(params.get(name)); };
}

ParamFn frozen(Tape& tape, const ParameterSet& params) {
  return [&tape, &params](std::string_view name) { return tape.constant_ref(params.get(name)); };
}

void init_normal(ParameterSet& params, std::mt19937_64& rng, double stddev) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string& name = params.name(i);
    auto data = params.at(i).data();
    if (name.ends_with(".g")) {
      std::fill(data.begin(), data.end(), 1.0);
    } else if (name.ends_with(".b")) {
      std::fill(data.begin(), data.end(), 0.0);
    } else {
      for (auto& x : data) x = stddev * standard_normal(rng);
    }
  }
}

}  // namespace recipegen::nn
