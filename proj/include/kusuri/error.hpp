#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kusuri {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised for malformed input files; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// A forward or backward pass produced NaN/Inf; names the offending layer.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& layer)
      : Error("non-finite value in layer '" + layer + "'"), layer_(layer) {}

  const std::string& layer() const noexcept { return layer_; }

 private:
  std::string layer_;
};

}  // namespace kusuri
