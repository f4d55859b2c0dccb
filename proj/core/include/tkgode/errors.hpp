#pragma once

#include <stdexcept>
#include <string>

namespace tkg {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape disagreement between operands.
struct DimError : Error {
  using Error::Error;
};

// Row/column/entity/relation id out of range.
struct IndexError : Error {
  using Error::Error;
};

// A documented precondition was violated by the caller.
struct ContractError : Error {
  using Error::Error;
};

// Malformed input file.
struct ParseError : Error {
  using Error::Error;
};

// Bad run configuration (unknown key, invalid value, missing path).
struct ConfigError : Error {
  using Error::Error;
};

// Non-finite value where a finite one is required.
struct NumericError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace tkg
