#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tsforge/error.hpp"

namespace tsforge {

using Json = nlohmann::ordered_json;

// Typed, strict accessor over one JSON object. Every key read is recorded;
// finish() rejects whatever was left unread.
class FieldReader {
 public:
  explicit FieldReader(const Json& object);

  std::string string(std::string_view key);
  double number(std::string_view key);
  std::int64_t integer(std::string_view key);
  bool boolean(std::string_view key);
  std::vector<double> numbers(std::string_view key);
  std::vector<std::string> strings(std::string_view key);
  const Json& object(std::string_view key);
  const Json& array(std::string_view key);

  bool has(std::string_view key) const;
  std::optional<std::string> optional_string(std::string_view key);
  std::optional<double> optional_number(std::string_view key);
  std::optional<bool> optional_boolean(std::string_view key);

  // Accepts an optional "schema" key, which must equal "v1" when present.
  void schema_v1();
  void finish() const;

 private:
  const Json& required(std::string_view key);

  const Json& object_;
  std::set<std::string, std::less<>> seen_;
};

}  // namespace tsforge
