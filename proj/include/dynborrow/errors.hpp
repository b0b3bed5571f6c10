#pragma once

#include <stdexcept>
#include <string>

namespace dynborrow {

// Domain errors surface as std::invalid_argument (bad inputs) or
// NumericError (arithmetic left the representable range).

class UnsupportedVariant : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericError : public std::range_error {
 public:
  using std::range_error::range_error;
};

}  // namespace dynborrow
