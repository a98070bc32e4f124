#pragma once

#include <stdexcept>
#include <string>

namespace cooprec {

/// Raised when a caller breaks an operation's precondition (bad index,
/// mismatched dimensions, invalid scenario fields).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Raised when a log-barrier objective is evaluated outside its domain,
/// i.e. when one party's gain is not strictly positive.
class BarrierViolation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed external input (CSV, JSON, config files).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace cooprec
