#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mesres/io.hpp"

namespace mesres::detail {

// Pulls a field out of an object and tracks which keys were consumed so that
// leftovers can be reported as unknown fields.
struct Reader {
  const nlohmann::json& obj;
  std::string where;
  mutable std::vector<std::string> consumed;

  Reader(const nlohmann::json& o, std::string w) : obj(o), where(std::move(w)) {
    if (!obj.is_object()) throw ParseError(where + ": expected an object");
  }

  const nlohmann::json* find(const std::string& key) const {
    auto it = obj.find(key);
    if (it == obj.end()) return nullptr;
    consumed.push_back(key);
    return &*it;
  }

  template <typename T>
  T required(const std::string& key) const {
    const nlohmann::json* v = find(key);
    if (!v) throw ParseError(where + ": missing field '" + key + "'");
    try {
      return v->get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where + ": field '" + key + "': " + e.what());
    }
  }

  template <typename T>
  T optional(const std::string& key, T fallback) const {
    const nlohmann::json* v = find(key);
    if (!v) return fallback;
    try {
      return v->get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where + ": field '" + key + "': " + e.what());
    }
  }

  void finish() const {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      bool known = false;
      for (const auto& k : consumed)
        if (k == it.key()) { known = true; break; }
      if (!known) throw ParseError(where + ": unknown field '" + it.key() + "'");
    }
  }
};

}  // namespace mesres::detail
