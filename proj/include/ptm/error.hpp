#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ptm {

/// Parameter outside its admissible set (non-positive scale, empty box, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A documented precondition of an operation was violated by the caller.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A numerical post-condition could not be established.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. `offset` is the byte position where parsing failed,
/// or npos when the failure is not tied to a byte.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset = npos)
      : std::runtime_error(offset == npos ? what : what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Structured file that parsed but does not match the expected schema.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ptm
