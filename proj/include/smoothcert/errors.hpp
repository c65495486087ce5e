#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace smoothcert {

// Argument violates a documented precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An iterative numerical routine failed to converge or produced a non-finite value.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed file or wire format.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// p(1) = 1 and p(2) = 0: the certified radius is unbounded.
class InfiniteRadius : public std::domain_error {
 public:
  InfiniteRadius() : std::domain_error("certified radius is infinite (p1 = 1, p2 = 0)") {}
};

class TrainingError : public std::runtime_error {
 public:
  TrainingError(std::size_t epoch, const std::string& what)
      : std::runtime_error("epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}

  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

// Base classifier threw or returned an out-of-range label while sampling.
class ClassifierError : public std::runtime_error {
 public:
  ClassifierError(std::size_t sample_index, const std::string& what)
      : std::runtime_error("sample " + std::to_string(sample_index) + ": " + what),
        sample_index_(sample_index) {}

  std::size_t sample_index() const noexcept { return sample_index_; }

 private:
  std::size_t sample_index_;
};

}  // namespace smoothcert
