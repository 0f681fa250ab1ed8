#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tsforge {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Record-level schema violation; carries no location.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// Failure tied to a specific line of a JSONL file (1-based, 0 when not line-specific).
class ManifestError : public Error {
 public:
  ManifestError(const std::string& path, std::size_t line, const std::string& what)
      : Error(line ? path + ":" + std::to_string(line) + ": " + what : path + ": " + what),
        path_(path),
        line_(line) {}

  const std::string& path() const noexcept { return path_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string path_;
  std::size_t line_;
};

}  // namespace tsforge
