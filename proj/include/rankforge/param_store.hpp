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

#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "rankforge/array.hpp"

namespace rankforge {

struct ParamEntry {
  Array value;
  Array grad;
  // Adam first and second moment estimates.
  Array m;
  Array v;
};

// Named trainable arrays. Iteration is in lexicographic name order, which is
// what makes optimizer updates and serialization deterministic.
class ParamStore {
 public:
  using Map = std::map<std::string, ParamEntry, std::less<>>;

  void add(const std::string& name, Array value);
  bool contains(std::string_view name) const;
  void erase(std::string_view name);

  ParamEntry& entry(std::string_view name);
  const ParamEntry& entry(std::string_view name) const;
  Array& value(std::string_view name) { return entry(name).value; }
  const Array& value(std::string_view name) const { return entry(name).value; }
  Array& grad(std::string_view name) { return entry(name).grad; }
  const Array& grad(std::string_view name) const { return entry(name).grad; }

  void zero_grad();
  std::size_t size() const { return entries_.size(); }
  // Total number of scalar parameters.
  std::size_t parameter_count() const;
  std::size_t parameter_count(std::string_view prefix) const;
  std::vector<std::string> names() const;

  // Copy without any entry whose name starts with `prefix`.
  ParamStore without_prefix(std::string_view prefix) const;

  Map::iterator begin() { return entries_.begin(); }
  Map::iterator end() { return entries_.end(); }
  Map::const_iterator begin() const { return entries_.begin(); }
  Map::const_iterator end() const { return entries_.end(); }

 private:
  Map entries_;
};

// Text format: one `param <name> <rank> <dims...> <values...>` line per entry,
// values in shortest round-trip form so that save/load is exact.
void write_params(std::ostream& out, const ParamStore& params);
ParamStore read_params(std::istream& in, const std::string& source);

}  // namespace rankforge
