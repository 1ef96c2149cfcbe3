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
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rankforge/trainer.hpp"

namespace rankforge {

// Flat `key = value` text with `#` comments. Keys are canonicalized so that
// `neg-per-query` and `neg_per_query` name the same entry.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in, const std::string& source);
  static KeyValueConfig load(const std::string& path);

  void set(std::string_view key, std::string value);
  std::optional<std::string> get(std::string_view key) const;
  bool has(std::string_view key) const { return get(key).has_value(); }
  // Entries of `overrides` replace existing ones.
  void merge(const KeyValueConfig& overrides);
  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

std::string canonical_key(std::string_view key);

struct ConfigKey {
  std::string_view name;  // canonical, as used in files
  std::string_view help;
};

// Keys understood by TrainConfig.
std::span<const ConfigKey> train_config_keys();

// Defaults overridden by every recognised key; unknown keys that are not in
// `extra_keys` raise ConfigError.
TrainConfig train_config_from(const KeyValueConfig& kv,
                              std::span<const std::string_view> extra_keys = {});

// "[5,7,10,25]" or "5,7,10,25".
std::vector<std::size_t> parse_size_list(std::string_view text);
std::vector<std::uint64_t> parse_seed_list(std::string_view text);

// Pool size combinations: 1-based indices into the default sweep ("1,4,14"),
// explicit lists ("[2,3,10,17];[5,7,10,25]") or "all".
std::vector<std::array<std::size_t, 4>> parse_combinations(std::string_view text);

}  // namespace rankforge
