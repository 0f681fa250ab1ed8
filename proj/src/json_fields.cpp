#include "tsforge/json_fields.hpp"

#include <cmath>

namespace tsforge {

FieldReader::FieldReader(const Json& object) : object_(object) {
  if (!object_.is_object()) throw SchemaError("expected a JSON object");
}

bool FieldReader::has(std::string_view key) const { return object_.contains(key); }

const Json& FieldReader::required(std::string_view key) {
  auto it = object_.find(key);
  if (it == object_.end()) throw SchemaError("missing field '" + std::string(key) + "'");
  seen_.emplace(key);
  return *it;
}

std::string FieldReader::string(std::string_view key) {
  const Json& v = required(key);
  if (!v.is_string()) throw SchemaError("field '" + std::string(key) + "' must be a string");
  return v.get<std::string>();
}

double FieldReader::number(std::string_view key) {
  const Json& v = required(key);
  if (!v.is_number()) throw SchemaError("field '" + std::string(key) + "' must be a number");
  double d = v.get<double>();
  if (!std::isfinite(d)) throw SchemaError("field '" + std::string(key) + "' must be finite");
  return d;
}

std::int64_t FieldReader::integer(std::string_view key) {
  const Json& v = required(key);
  if (!v.is_number_integer()) throw SchemaError("field '" + std::string(key) + "' must be an integer");
  return v.get<std::int64_t>();
}

bool FieldReader::boolean(std::string_view key) {
  const Json& v = required(key);
  if (!v.is_boolean()) throw SchemaError("field '" + std::string(key) + "' must be a boolean");
  return v.get<bool>();
}

std::vector<double> FieldReader::numbers(std::string_view key) {
  const Json& v = required(key);
  if (!v.is_array()) throw SchemaError("field '" + std::string(key) + "' must be an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (const Json& e : v) {
    if (!e.is_number()) throw SchemaError("field '" + std::string(key) + "' must contain only numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<std::string> FieldReader::strings(std::string_view key) {
  const Json& v = required(key);
  if (!v.is_array()) throw SchemaError("field '" + std::string(key) + "' must be an array");
  std::vector<std::string> out;
  out.reserve(v.size());
  for (const Json& e : v) {
    if (!e.is_string()) throw SchemaError("field '" + std::string(key) + "' must contain only strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

const Json& FieldReader::object(std::string_view key) {
  const Json& v = required(key);
  if (!v.is_object()) throw SchemaError("field '" + std::string(key) + "' must be an object");
  return v;
}

const Json& FieldReader::array(std::string_view key) {
  const Json& v = required(key);
  if (!v.is_array()) throw SchemaError("field '" + std::string(key) + "' must be an array");
  return v;
}

std::optional<std::string> FieldReader::optional_string(std::string_view key) {
  if (!has(key) || object_.at(key).is_null()) {
    if (has(key)) seen_.emplace(key);
    return std::nullopt;
  }
  return string(key);
}

std::optional<double> FieldReader::optional_number(std::string_view key) {
  if (!has(key) || object_.at(key).is_null()) {
    if (has(key)) seen_.emplace(key);
    return std::nullopt;
  }
  return number(key);
}

std::optional<bool> FieldReader::optional_boolean(std::string_view key) {
  if (!has(key) || object_.at(key).is_null()) {
    if (has(key)) seen_.emplace(key);
    return std::nullopt;
  }
  return boolean(key);
}

void FieldReader::schema_v1() {
  if (auto s = optional_string("schema"); s && *s != "v1") {
    throw SchemaError("unsupported schema '" + *s + "' (expected v1)");
  }
}

void FieldReader::finish() const {
  for (auto it = object_.begin(); it != object_.end(); ++it) {
    if (!seen_.contains(it.key())) throw SchemaError("unknown field '" + it.key() + "'");
  }
}

}  // namespace tsforge
