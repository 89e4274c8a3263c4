#pragma once

#include <initializer_list>
#include <string>
#include <string_view>
#include <type_traits>

#include "ccs/errors.hpp"
#include "json.hpp"

// Strict reading of flat JSON config objects.
namespace ccs::json_fields {

inline void expect_object(const nlohmann::json& j, const std::string& context) {
  if (!j.is_object()) throw ParseError(context + ": expected a JSON object");
}

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<std::string_view> allowed,
                           const std::string& context) {
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || a == key;
    if (!known) throw ParseError(context + ": unknown key '" + key + "'");
  }
}

// Leaves `out` untouched when the key is absent.
template <typename T>
void read(const nlohmann::json& j, const char* key, T& out, const std::string& context) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
    if (!it->is_number_unsigned()) throw ParseError(context + "." + key + ": expected a non-negative integer");
  }
  try {
    out = it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(context + "." + key + ": " + e.what());
  }
}

}  // namespace ccs::json_fields
