#pragma once

#include <stdexcept>
#include <string>

namespace skinelev {

// Three failure families; the CLI maps them to exit codes 2, 3 and 4.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent configuration (bad keys, invalid enum values,
// missing required paths).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Input data violates a contract: unreadable files, unknown labels,
// duplicate ids, empty splits, malformed label rows.
class DataError : public Error {
 public:
  using Error::Error;
};

// Model or numerical failure at run time (shape mismatch, wrong role,
// undefined statistic).
class ModelError : public Error {
 public:
  using Error::Error;
};

}  // namespace skinelev
