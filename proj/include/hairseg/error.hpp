#pragma once

#include <stdexcept>
#include <string>

namespace hairseg {

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Tensor shape or spatial-size disagreement between operands.
class ShapeError : public Error {
  public:
    using Error::Error;
};

// Value outside its documented domain (e.g. image values outside [0, 1]).
class ValueError : public Error {
  public:
    using Error::Error;
};

// Network configuration or weight store violates a structural invariant.
class ConfigError : public Error {
  public:
    using Error::Error;
};

// Malformed or truncated bytes in one of the on-disk formats.
class FormatError : public Error {
  public:
    using Error::Error;
};

} // namespace hairseg
