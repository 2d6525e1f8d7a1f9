#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spinr {

/// Training produced a non-finite loss or gradient.
class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, std::size_t step)
      : std::runtime_error(what + " at step " + std::to_string(step)),
        step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

/// Malformed input bytes (image files, bitstream headers).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// A bitstream could not be turned into a usable model.
class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace spinr
