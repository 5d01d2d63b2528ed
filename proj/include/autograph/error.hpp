#pragma once

#include <stdexcept>
#include <string>

namespace autograph {

/// Precondition of an operation was not met by the caller.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A mandatory dataset file is missing or unreadable.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed content in a dataset, prediction or config file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Requested feature block would exceed the memory cap.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The time budget is spent; no new trial may start.
class BudgetExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Prediction file does not cover the ground-truth ids.
class ScoringError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ContractViolation(what);
}

}  // namespace autograph
