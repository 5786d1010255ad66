#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pedwatch {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A record in an input document could not be parsed or failed validation.
/// `line` is 1-based; 0 when the input is not line-oriented.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::string field, const std::string& what)
      : Error(format(line, field, what)), line_(line), field_(std::move(field)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  static std::string format(std::size_t line, const std::string& field, const std::string& what) {
    std::string out;
    if (line > 0) out += "line " + std::to_string(line) + ": ";
    if (!field.empty()) out += "field '" + field + "': ";
    return out + what;
  }

  std::size_t line_;
  std::string field_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

}  // namespace pedwatch
