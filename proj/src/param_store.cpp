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

#include "rankforge/param_store.hpp"

#include <istream>
#include <ostream>
#include <string>

#include "rankforge/errors.hpp"
#include "rankforge/text.hpp"

namespace rankforge {

void ParamStore::add(const std::string& name, Array value) {
  if (name.empty()) throw ConfigError("parameter name must not be empty");
  if (entries_.count(name)) {
    throw ConfigError("duplicate parameter '" + name + "'");
  }
  ParamEntry e;
  e.grad = Array::zeros_like(value);
  e.m = Array::zeros_like(value);
  e.v = Array::zeros_like(value);
  e.value = std::move(value);
  entries_.emplace(name, std::move(e));
}

bool ParamStore::contains(std::string_view name) const {
  return entries_.find(name) != entries_.end();
}

void ParamStore::erase(std::string_view name) {
  auto it = entries_.find(name);
  if (it != entries_.end()) entries_.erase(it);
}

ParamEntry& ParamStore::entry(std::string_view name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) {
    throw ConfigError("unknown parameter '" + std::string(name) + "'");
  }
  return it->second;
}

const ParamEntry& ParamStore::entry(std::string_view name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) {
    throw ConfigError("unknown parameter '" + std::string(name) + "'");
  }
  return it->second;
}

void ParamStore::zero_grad() {
  for (auto& [name, e] : entries_) e.grad.fill(0.0);
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, e] : entries_) n += e.value.size();
  return n;
}

std::size_t ParamStore::parameter_count(std::string_view prefix) const {
  std::size_t n = 0;
  for (const auto& [name, e] : entries_) {
    if (std::string_view(name).starts_with(prefix)) n += e.value.size();
  }
  return n;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, e] : entries_) out.push_back(name);
  return out;
}

ParamStore ParamStore::without_prefix(std::string_view prefix) const {
  ParamStore out;
  for (const auto& [name, e] : entries_) {
    if (!std::string_view(name).starts_with(prefix)) {
      out.entries_.emplace(name, e);
    }
  }
  return out;
}

void write_params(std::ostream& out, const ParamStore& params) {
  for (const auto& [name, e] : params) {
    out << "param " << name << ' ' << e.value.rank();
    for (std::size_t d : e.value.shape()) out << ' ' << d;
    for (double v : e.value.values()) out << ' ' << format_double(v);
    out << '\n';
  }
}

ParamStore read_params(std::istream& in, const std::string& source) {
  ParamStore store;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tokens = split_ws(line);
    if (tokens.empty() || tokens[0].starts_with("#")) continue;
    if (tokens[0] != "param") continue;
    if (tokens.size() < 3) throw ParseError(source, lineno, "truncated param");
    const std::string name(tokens[1]);
    const auto rank = parse_int(tokens[2]);
    if (!rank || *rank < 0 || *rank > 2 ||
        tokens.size() < 3 + static_cast<std::size_t>(*rank)) {
      throw ParseError(source, lineno, "bad rank for '" + name + "'");
    }
    std::vector<std::size_t> shape;
    std::size_t count = 1;
    for (long long i = 0; i < *rank; ++i) {
      const auto d = parse_int(tokens[3 + i]);
      if (!d || *d < 0) throw ParseError(source, lineno, "bad dimension");
      shape.push_back(static_cast<std::size_t>(*d));
      count *= shape.back();
    }
    const std::size_t first = 3 + static_cast<std::size_t>(*rank);
    if (tokens.size() != first + count) {
      throw ParseError(source, lineno,
                       "expected " + std::to_string(count) + " values for '" +
                           name + "'");
    }
    std::vector<double> values;
    values.reserve(count);
    for (std::size_t i = first; i < tokens.size(); ++i) {
      const auto v = parse_double(tokens[i]);
      if (!v) throw ParseError(source, lineno, "bad value");
      values.push_back(*v);
    }
    try {
      store.add(name, Array(std::move(shape), std::move(values)));
    } catch (const ConfigError& e) {
      throw ParseError(source, lineno, e.what());
    }
  }
  return store;
}

}  // namespace rankforge
