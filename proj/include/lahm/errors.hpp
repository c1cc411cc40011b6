#pragma once

#include <stdexcept>
#include <string>

namespace lahm {

/// Bad caller input: invalid parameters, malformed files, underdetermined problems.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed on otherwise valid input.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lahm
