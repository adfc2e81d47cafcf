#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace msvgd {

// Precondition violated by the caller (shape mismatch, non-positive bandwidth, ...).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A quantity that must stay finite did not (e.g. an AdaGrad accumulator).
class NumericFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A run produced a non-finite parameter or particle.
class DivergedError : public std::runtime_error {
 public:
  explicit DivergedError(std::size_t iteration)
      : std::runtime_error("run diverged at iteration " + std::to_string(iteration)),
        iteration_(iteration) {}

  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

// Every learning-rate candidate of a grid search diverged.
class NoViableStepSize : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool condition, const char* message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace detail

}  // namespace msvgd
