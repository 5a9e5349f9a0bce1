#pragma once

#include <stdexcept>
#include <string>

namespace clir {

/// Malformed or invariant-violating input data. Maps to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad flags, missing inputs, inconsistent configuration. Maps to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A query kind the retrieval pipeline does not handle (conceptual, example_of).
class UnsupportedQuery : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Builds "<file>:<line>: <what>" for loader diagnostics.
std::string located(const std::string& file, std::size_t line, const std::string& what);

}  // namespace clir
