#pragma once

#include <stdexcept>
#include <string>

namespace anomalycd {

/// Malformed or inconsistent user input (bad file, wrong shape, bad flag value).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A pipeline stage could not complete on otherwise valid input.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// An output failed one of its structural invariants. Always a bug.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace anomalycd
