#pragma once

// JSON reading helpers shared by the scene and experiment loaders. Error
// locations are JSON pointers rooted at the document.

#include <algorithm>
#include <initializer_list>
#include <string>
#include <string_view>

#include "debsdf/errors.hpp"
#include "debsdf/sdf_scene.hpp"
#include "json.hpp"

namespace debsdf::jsonio {

using nlohmann::json;

inline void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      throw ParseError(where + "/" + it.key(), "unknown key");
  }
}

inline const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + "/" + key, "missing field");
  return *it;
}

inline double number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ParseError(where, "expected a number");
  return v.get<double>();
}

inline Vec3 vector_of(const json& v, int dim, const std::string& where) {
  if (!v.is_array() || static_cast<int>(v.size()) != dim)
    throw ParseError(where, "expected an array of " + std::to_string(dim) + " numbers");
  Vec3 out;
  for (int k = 0; k < dim; ++k) out[k] = number(v[static_cast<std::size_t>(k)], where + "/" + std::to_string(k));
  return out;
}

inline Vec3 albedo_of(const json& obj, const std::string& where) {
  auto it = obj.find("albedo");
  if (it == obj.end()) return {0.5, 0.5, 0.5};
  if (it->is_number()) {
    const double g = it->get<double>();
    return {g, g, g};
  }
  return vector_of(*it, 3, where + "/albedo");
}

inline std::string line_of(std::string_view text, std::size_t byte) {
  const auto end = std::min(byte, text.size());
  const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(end), '\n');
  return "line " + std::to_string(line);
}


AnalyticScene scene_from_json(const json& doc, const std::string& root);

// Parse text, mapping syntax errors to ParseError("line N", ...).
inline json parse_document(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(line_of(text, e.byte == 0 ? 0 : e.byte - 1), e.what());
  }
}

}  // namespace debsdf::jsonio
