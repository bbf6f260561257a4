#pragma once

#include <stdexcept>
#include <string>

namespace gginf {

// Base of everything the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameters or malformed configuration. The CLI maps this to exit 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A well-formed request that failed while running (horizon too short,
// quadrature did not converge, factorization failed, ...). Exit 1.
class RuntimeError : public Error {
 public:
  using Error::Error;
};

}  // namespace gginf
