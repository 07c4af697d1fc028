// Copyright 2026 The idesign Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef IDESIGN_JSON_UTIL_H_
#define IDESIGN_JSON_UTIL_H_

#include <initializer_list>
#include <string>
#include <string_view>

#include "idesign/errors.h"
#include "json.hpp"

namespace idesign {

// Rejects keys outside `allowed`; `where` prefixes the error's field path.
inline void CheckKeys(const nlohmann::json& j,
                      std::initializer_list<std::string_view> allowed,
                      const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (std::string_view a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(where + "." + key + ": unknown key");
  }
}

template <typename T>
T Require(const nlohmann::json& j, const std::string& key,
          const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + "." + key + ": missing");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

template <typename T>
T Optional(const nlohmann::json& j, const std::string& key, T fallback,
           const std::string& where) {
  if (!j.contains(key)) return fallback;
  return Require<T>(j, key, where);
}

// FNV-1a over the compact dump; used as the config hash in outputs.
inline std::string ConfigHash(const nlohmann::json& j) {
  const std::string s = j.dump();
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  static const char* kHex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[i] = kHex[h & 0xf];
  return out;
}

}  // namespace idesign

#endif  // IDESIGN_JSON_UTIL_H_
