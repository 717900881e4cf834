#pragma once

#include <stdexcept>
#include <string>

namespace fpm {

/// Invalid argument or configuration value.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Bilinear sampling outside the image domain.
class SamplingError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Input carries no usable signal (constant image, no valid overlap, ...).
class DegenerateInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A patch or descriptor footprint does not fit inside the image.
class ExtractionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SegmentationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Too few correspondences for robust fitting.
class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed text input; carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace fpm
