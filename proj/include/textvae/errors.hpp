#pragma once

#include <stdexcept>
#include <string>

namespace textvae {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape disagreement between operands.
struct DimensionError : Error {
  using Error::Error;
};

// NaN/Inf entered or left a numerical routine.
struct NumericError : Error {
  using Error::Error;
};

// A caller broke a documented precondition.
struct ContractError : Error {
  using Error::Error;
};

// Invalid configuration value.
struct ConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

// Unreadable or truncated file content.
struct FormatError : Error {
  using Error::Error;
};

// File is well-formed but does not match the current context.
struct CompatibilityError : Error {
  using Error::Error;
};

}  // namespace textvae
