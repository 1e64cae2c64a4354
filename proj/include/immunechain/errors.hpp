#pragma once

#include <stdexcept>

namespace immunechain {

/// Caller-supplied parameters, indices or configuration are out of range.
class invalid_input : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical or structural check failed at run time (reducible generator,
/// unreachable target, iteration cap, size cap).
class diagnostic_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace immunechain
