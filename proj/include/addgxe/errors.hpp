#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace addgxe {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A column named in the schema is absent from the input header.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& column, const std::string& what);
  const std::string& column() const { return column_; }

 private:
  std::string column_;
};

/// A cell or record violates a dataset invariant. `row` is the 1-based data row
/// (header excluded), or 0 when the violation is not tied to a single row.
class ValidationError : public Error {
 public:
  ValidationError(std::size_t row, const std::string& what);
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

/// Iterative fit failed to converge (or ran off to a separated solution).
/// Carries the last iterate.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::vector<double> iterate);
  const std::vector<double>& iterate() const { return iterate_; }

 private:
  std::vector<double> iterate_;
};

class DegenerateVarianceError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ScenarioError : public Error {
 public:
  using Error::Error;
};

}  // namespace addgxe
