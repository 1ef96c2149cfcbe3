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

#include "rankforge/adam.hpp"

#include <cmath>
#include <string>

#include "rankforge/errors.hpp"

namespace rankforge {

void adam_step(ParamStore& params, const AdamOptions& options, std::size_t t) {
  if (t < 1) throw ConfigError("adam step counter must start at 1");
  if (!(options.lr > 0.0)) throw ConfigError("learning rate must be > 0");
  for (const auto& [name, e] : params) {
    if (!e.grad.all_finite()) {
      throw NumericError("non-finite gradient in parameter '" + name + "'");
    }
  }
  const double td = static_cast<double>(t);
  const double bc1 = 1.0 - std::pow(options.beta1, td);
  const double bc2 = 1.0 - std::pow(options.beta2, td);
  for (auto& [name, e] : params) {
    for (std::size_t k = 0; k < e.value.size(); ++k) {
      const double g = e.grad[k];
      e.m[k] = options.beta1 * e.m[k] + (1.0 - options.beta1) * g;
      e.v[k] = options.beta2 * e.v[k] + (1.0 - options.beta2) * g * g;
      const double m_hat = e.m[k] / bc1;
      const double v_hat = e.v[k] / bc2;
      e.value[k] -= options.lr * m_hat / (std::sqrt(v_hat) + options.eps);
    }
  }
}

}  // namespace rankforge
