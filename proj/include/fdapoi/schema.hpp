#ifndef FDAPOI_SCHEMA_HPP
#define FDAPOI_SCHEMA_HPP

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fdapoi/errors.hpp"

namespace fdapoi {

/// Structural validator for the subset of JSON Schema the published schema
/// files use: type, properties, required, items, enum, minimum, maximum,
/// minItems and additionalProperties (boolean form).
namespace schema {

using nlohmann::json;

namespace detail {

inline bool type_matches(const json& value, const std::string& type) {
  if (type == "object") return value.is_object();
  if (type == "array") return value.is_array();
  if (type == "string") return value.is_string();
  if (type == "boolean") return value.is_boolean();
  if (type == "null") return value.is_null();
  if (type == "integer") return value.is_number_integer() || value.is_number_unsigned();
  if (type == "number") return value.is_number();
  return false;
}

inline void check(const json& value, const json& schema, const std::string& path,
                  std::vector<std::string>& errors) {
  if (schema.contains("type")) {
    const json& t = schema["type"];
    bool ok = false;
    if (t.is_string()) {
      ok = type_matches(value, t.get<std::string>());
    } else if (t.is_array()) {
      for (const auto& alt : t)
        if (type_matches(value, alt.get<std::string>())) ok = true;
    }
    if (!ok) {
      errors.push_back(path + ": expected type " + t.dump() + ", got " +
                       std::string(value.type_name()));
      return;
    }
  }
  if (schema.contains("enum")) {
    bool ok = false;
    for (const auto& candidate : schema["enum"])
      if (candidate == value) ok = true;
    if (!ok) errors.push_back(path + ": value " + value.dump() + " not in enum");
  }
  if (value.is_number()) {
    if (schema.contains("minimum") && value.get<double>() < schema["minimum"].get<double>())
      errors.push_back(path + ": below minimum " + schema["minimum"].dump());
    if (schema.contains("maximum") && value.get<double>() > schema["maximum"].get<double>())
      errors.push_back(path + ": above maximum " + schema["maximum"].dump());
  }
  if (value.is_object()) {
    if (schema.contains("required")) {
      for (const auto& name : schema["required"])
        if (!value.contains(name.get<std::string>()))
          errors.push_back(path + ": missing required member '" + name.get<std::string>() + "'");
    }
    const json* props = schema.contains("properties") ? &schema["properties"] : nullptr;
    for (auto it = value.begin(); it != value.end(); ++it) {
      if (props != nullptr && props->contains(it.key())) {
        check(it.value(), (*props)[it.key()], path + "." + it.key(), errors);
      } else if (schema.contains("additionalProperties") &&
                 schema["additionalProperties"].is_boolean() &&
                 !schema["additionalProperties"].get<bool>()) {
        errors.push_back(path + ": unexpected member '" + it.key() + "'");
      }
    }
  }
  if (value.is_array()) {
    if (schema.contains("minItems") && value.size() < schema["minItems"].get<std::size_t>())
      errors.push_back(path + ": fewer than " + schema["minItems"].dump() + " items");
    if (schema.contains("items")) {
      int i = 0;
      for (const auto& item : value) {
        check(item, schema["items"], path + "[" + std::to_string(i) + "]", errors);
        ++i;
      }
    }
  }
}

}  // namespace detail

inline std::vector<std::string> validate(const json& value, const json& schema_doc) {
  std::vector<std::string> errors;
  detail::check(value, schema_doc, "$", errors);
  return errors;
}

inline void validate_or_throw(const json& value, const json& schema_doc,
                              const std::string& what) {
  const std::vector<std::string> errors = validate(value, schema_doc);
  if (!errors.empty()) throw data_error(what + ": " + errors.front());
}

inline json load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("schema: cannot open '" + path + "'");
  json j;
  in >> j;
  return j;
}

}  // namespace schema
}  // namespace fdapoi

#endif  // FDAPOI_SCHEMA_HPP
