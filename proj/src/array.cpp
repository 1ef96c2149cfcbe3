// Copyright 2026 The rankforge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rankforge/array.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "rankforge/errors.hpp"

namespace rankforge {

namespace {

std::size_t element_count(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

}  // namespace

Array::Array(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (shape_.size() > 2) {
    throw ConfigError("arrays of rank > 2 are not supported");
  }
  if (element_count(shape_) != values_.size()) {
    throw ConfigError("array shape " + shape_string(shape_) + " needs " +
                      std::to_string(element_count(shape_)) +
                      " values, got " + std::to_string(values_.size()));
  }
}

Array Array::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Array({n}, std::move(values));
}

Array Array::matrix(std::size_t rows, std::size_t cols,
                    std::vector<double> values) {
  return Array({rows, cols}, std::move(values));
}

Array Array::zeros(std::vector<std::size_t> shape) {
  const std::size_t n = element_count(shape);
  return Array(std::move(shape), std::vector<double>(n, 0.0));
}

double Array::item() const {
  if (values_.size() != 1) {
    throw ConfigError("item() on array of shape " + shape_string(shape_));
  }
  return values_[0];
}

void Array::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

bool Array::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

}  // namespace rankforge
