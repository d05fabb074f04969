#pragma once

#include <stdexcept>
#include <string>

namespace varimix {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes of two operands do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A file could not be parsed, or its header disagrees with its payload.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// An input value violates a documented domain (NaN, out-of-range, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A zero-norm signature or similar geometry for which a metric is undefined.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

class EmptyClassError : public Error {
 public:
  using Error::Error;
};

/// Enumeration size exceeds the configured model budget.
class BudgetError : public Error {
 public:
  using Error::Error;
};

class RankError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver produced a non-finite cost.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace varimix
