#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace bevtrack {

// Bad parameter value (sigma <= 0, C <= 0, empty input where forbidden).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Tensor shape incompatibility.
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OutOfBounds : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Raised by resample_fixed on an empty cloud; callers take the zero-score path.
class EmptyShape : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::uint64_t offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

}  // namespace bevtrack
