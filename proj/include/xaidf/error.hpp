#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace xaidf {

// Precondition violations on arguments or configuration.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// File system failures (unreadable / unwritable paths, bad raster formats).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Connection-level failures talking to a remote classifier. Retryable.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A peer sent bytes that violate the wire contract.
class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Linear-algebra failures (singular or hopelessly ill-conditioned systems).
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double condition)
      : std::runtime_error(what + " (condition estimate " + std::to_string(condition) + ")"),
        condition_(condition) {}

  double condition() const noexcept { return condition_; }

 private:
  double condition_;
};

}  // namespace xaidf
