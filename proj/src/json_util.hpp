#pragma once

// Shared helpers for schema-checked JSON access. Internal to the library.

#include <nlohmann/json.hpp>

#include <string>

#include "modforge/geometry.hpp"
#include "modforge/module_model.hpp"

namespace modforge::detail {

using json = nlohmann::json;  // object keys are kept sorted for byte-stable output

inline const json& require_field(const json& j, const std::string& path, const char* key) {
  if (!j.is_object()) throw ParseError(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(path + "/" + key, "missing field");
  return *it;
}

inline std::string require_string(const json& j, const std::string& path, const char* key) {
  const json& v = require_field(j, path, key);
  if (!v.is_string()) throw ParseError(path + "/" + key, "expected a string");
  return v.get<std::string>();
}

inline double require_number(const json& j, const std::string& path, const char* key) {
  const json& v = require_field(j, path, key);
  if (!v.is_number()) throw ParseError(path + "/" + key, "expected a number");
  return v.get<double>();
}

inline const json& require_array(const json& j, const std::string& path, const char* key,
                                 std::size_t size = 0) {
  const json& v = require_field(j, path, key);
  if (!v.is_array()) throw ParseError(path + "/" + key, "expected an array");
  if (size != 0 && v.size() != size) {
    throw ParseError(path + "/" + key,
                     "expected " + std::to_string(size) + " elements, got " +
                         std::to_string(v.size()));
  }
  return v;
}

inline double number_at(const json& arr, const std::string& path, std::size_t i) {
  const json& v = arr.at(i);
  if (!v.is_number()) {
    throw ParseError(path + "/" + std::to_string(i), "expected a number");
  }
  return v.get<double>();
}

/// Parses a [16 num] row-major homogeneous matrix. Checks the bottom row and
/// rotation orthonormality.
Transform parse_transform(const json& j, const std::string& path);

/// Row-major 16-element array.
json transform_to_json(const Transform& t);

Geometry parse_geometry(const json& j, const std::string& path);
json geometry_to_json(const Geometry& g);

json parse_document(const std::string& text);

}  // namespace modforge::detail
